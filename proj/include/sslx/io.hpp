#ifndef SSLX_IO_HPP
#define SSLX_IO_HPP

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslx/chain.hpp"
#include "sslx/dataset.hpp"
#include "sslx/naive_bayes.hpp"

namespace sslx {

// Raised for malformed input files; message carries path and line number.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError(ctx + ": bad number '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError(ctx + ": bad integer '" + s + "'");
    }
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

} // namespace detail

// --- Corpus files -----------------------------------------------------------
//
// Bag-of-words format:
//   bow <num_classes> <vocab>
//   <label or ?>\t<term>:<count> <term>:<count> ...
// one document per line, term indices sorted ascending, counts positive.
//
// CoNLL-style sequence format:
//   conll <num_states> <vocab>
//   <token>\t<label or ?>        (one position per line)
//   <blank line>                 (after every sequence)

inline void save_corpus(const Dataset& data, Dataset::Kind format, std::ostream& os) {
    if (format != data.kind)
        throw std::invalid_argument("save_corpus: dataset kind does not match requested format");
    if (format == Dataset::Kind::BagOfWords) {
        os << "bow " << data.num_labels << ' ' << data.vocab << '\n';
        for (const auto& s : data.samples) {
            if (s.is_labeled())
                os << s.class_label();
            else
                os << '?';
            os << '\t';
            bool first = true;
            for (std::size_t v = 0; v < s.counts.size(); ++v) {
                if (s.counts[v] == 0) continue;
                if (!first) os << ' ';
                os << v << ':' << s.counts[v];
                first = false;
            }
            os << '\n';
        }
    } else {
        os << "conll " << data.num_labels << ' ' << data.vocab << '\n';
        for (const auto& s : data.samples) {
            const int m = s.length();
            std::vector<int> clamp(m, -1);
            for (std::size_t i = 0; i < s.labels.observed_positions.size(); ++i)
                clamp[s.labels.observed_positions[i]] = s.labels.observed_values[i];
            for (int t = 0; t < m; ++t) {
                os << s.tokens[t] << '\t';
                if (clamp[t] >= 0)
                    os << clamp[t];
                else
                    os << '?';
                os << '\n';
            }
            os << '\n';
        }
    }
}

inline void save_corpus(const Dataset& data, Dataset::Kind format, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_corpus: cannot open " + path);
    save_corpus(data, format, os);
}

inline Dataset load_corpus(std::istream& is, const std::string& path = "<stream>") {
    std::string line;
    int lineno = 0;
    auto ctx = [&]() { return path + ":" + std::to_string(lineno); };

    if (!std::getline(is, line)) {
        // empty file: empty bag-of-words dataset
        Dataset d;
        return d;
    }
    ++lineno;
    auto header = detail::split_ws(line);
    if (header.size() != 3 || (header[0] != "bow" && header[0] != "conll"))
        throw DataError(ctx() + ": expected header 'bow|conll <labels> <vocab>'");
    Dataset d;
    d.kind = header[0] == "bow" ? Dataset::Kind::BagOfWords : Dataset::Kind::Sequence;
    d.num_labels = detail::parse_int(header[1], ctx());
    d.vocab = detail::parse_int(header[2], ctx());
    if (d.num_labels < 1 || d.vocab < 1) throw DataError(ctx() + ": bad header sizes");

    if (d.kind == Dataset::Kind::BagOfWords) {
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw DataError(ctx() + ": missing tab separator");
            const std::string label = line.substr(0, tab);
            Sample s;
            s.counts.assign(d.vocab, 0);
            if (label == "?") {
                s.labels = LabelObservation::none();
            } else {
                const int y = detail::parse_int(label, ctx());
                if (y < 0 || y >= d.num_labels)
                    throw DataError(ctx() + ": label out of range");
                s.labels = LabelObservation::full({y});
            }
            int prev_term = -1;
            for (const auto& tok : detail::split_ws(line.substr(tab + 1))) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw DataError(ctx() + ": expected term:count, got '" + tok + "'");
                const int v = detail::parse_int(tok.substr(0, colon), ctx());
                const int c = detail::parse_int(tok.substr(colon + 1), ctx());
                if (v < 0 || v >= d.vocab) throw DataError(ctx() + ": term index out of range");
                if (c <= 0) throw DataError(ctx() + ": nonpositive count");
                if (v <= prev_term) throw DataError(ctx() + ": term indices not sorted ascending");
                prev_term = v;
                s.counts[v] = c;
            }
            d.samples.push_back(std::move(s));
        }
    } else {
        std::vector<int> tokens, clamp;
        auto flush = [&]() {
            if (tokens.empty()) return;
            Sample s;
            s.tokens = tokens;
            std::vector<int> pos, vals;
            for (std::size_t t = 0; t < clamp.size(); ++t)
                if (clamp[t] >= 0) {
                    pos.push_back(static_cast<int>(t));
                    vals.push_back(clamp[t]);
                }
            if (pos.size() == tokens.size())
                s.labels = LabelObservation::full(vals);
            else if (pos.empty())
                s.labels = LabelObservation::none();
            else
                s.labels = LabelObservation::subset(pos, vals);
            d.samples.push_back(std::move(s));
            tokens.clear();
            clamp.clear();
        };
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty()) {
                flush();
                continue;
            }
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw DataError(ctx() + ": missing tab separator");
            const int tok = detail::parse_int(line.substr(0, tab), ctx());
            if (tok < 0 || tok >= d.vocab) throw DataError(ctx() + ": token out of alphabet");
            const std::string label = line.substr(tab + 1);
            int y = -1;
            if (label != "?") {
                y = detail::parse_int(label, ctx());
                if (y < 0 || y >= d.num_labels) throw DataError(ctx() + ": label out of range");
            }
            tokens.push_back(tok);
            clamp.push_back(y);
        }
        flush();
    }
    return d;
}

inline Dataset load_corpus(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_corpus: cannot open " + path);
    return load_corpus(is, path);
}

// Moves all observed labels into true_labels and marks everything
// unobserved. Used to treat a fully labeled corpus as a pool with withheld
// labels (two-stage studies).
inline void withhold_labels(Dataset& data) {
    for (auto& s : data.samples) {
        if (!s.labels.fully_observed(s.length()))
            throw std::invalid_argument("withhold_labels: sample is not fully labeled");
        s.true_labels = s.labels.observed_values;
        s.labels = LabelObservation::none();
    }
}

// --- Model parameter files --------------------------------------------------
// Named blocks of probability rows, printed with 17 significant digits so the
// round trip is bit exact.

inline void save_model(const NaiveBayesModel& m, std::ostream& os) {
    os << "naive_bayes " << m.num_classes() << ' ' << m.vocab() << ' ' << m.doc_length() << '\n';
    os << "prior";
    for (int c = 0; c < m.num_classes(); ++c) os << ' ' << detail::fmt_double(m.prior()[c]);
    os << '\n';
    for (int c = 0; c < m.num_classes(); ++c) {
        os << "cond";
        for (int v = 0; v < m.vocab(); ++v) os << ' ' << detail::fmt_double(m.conditionals()(c, v));
        os << '\n';
    }
}

inline void save_model(const ChainModel& m, std::ostream& os) {
    os << "chain " << m.num_states() << ' ' << m.vocab() << '\n';
    os << "init";
    for (int k = 0; k < m.num_states(); ++k) os << ' ' << detail::fmt_double(m.initial()[k]);
    os << '\n';
    for (int k = 0; k < m.num_states(); ++k) {
        os << "trans";
        for (int j = 0; j < m.num_states(); ++j)
            os << ' ' << detail::fmt_double(m.transition()(k, j));
        os << '\n';
    }
    for (int k = 0; k < m.num_states(); ++k) {
        os << "emit";
        for (int v = 0; v < m.vocab(); ++v) os << ' ' << detail::fmt_double(m.emission()(k, v));
        os << '\n';
    }
}

template <typename Model>
inline void save_model(const Model& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_model: cannot open " + path);
    save_model(m, os);
}

namespace detail {

inline Eigen::VectorXd parse_row(const std::vector<std::string>& toks, const char* tag, int size,
                                 const std::string& ctx) {
    if (toks.empty() || toks[0] != tag || static_cast<int>(toks.size()) != size + 1)
        throw DataError(ctx + ": expected '" + tag + "' row with " + std::to_string(size) +
                        " entries");
    Eigen::VectorXd row(size);
    for (int i = 0; i < size; ++i) row[i] = parse_double(toks[i + 1], ctx);
    return row;
}

} // namespace detail

inline NaiveBayesModel load_naive_bayes(std::istream& is, const std::string& path = "<stream>") {
    std::string line;
    int lineno = 0;
    auto ctx = [&]() { return path + ":" + std::to_string(lineno); };
    auto next_line = [&]() {
        if (!std::getline(is, line)) throw DataError(ctx() + ": unexpected end of file");
        ++lineno;
        return detail::split_ws(line);
    };
    auto header = next_line();
    if (header.size() != 4 || header[0] != "naive_bayes")
        throw DataError(ctx() + ": expected 'naive_bayes C V doc_length'");
    const int C = detail::parse_int(header[1], ctx());
    const int V = detail::parse_int(header[2], ctx());
    const int L = detail::parse_int(header[3], ctx());
    Eigen::VectorXd prior = detail::parse_row(next_line(), "prior", C, ctx());
    Eigen::MatrixXd cond(C, V);
    for (int c = 0; c < C; ++c) cond.row(c) = detail::parse_row(next_line(), "cond", V, ctx());
    return NaiveBayesModel(prior, cond, L);
}

inline ChainModel load_chain(std::istream& is, const std::string& path = "<stream>") {
    std::string line;
    int lineno = 0;
    auto ctx = [&]() { return path + ":" + std::to_string(lineno); };
    auto next_line = [&]() {
        if (!std::getline(is, line)) throw DataError(ctx() + ": unexpected end of file");
        ++lineno;
        return detail::split_ws(line);
    };
    auto header = next_line();
    if (header.size() != 3 || header[0] != "chain")
        throw DataError(ctx() + ": expected 'chain K V'");
    const int K = detail::parse_int(header[1], ctx());
    const int V = detail::parse_int(header[2], ctx());
    Eigen::VectorXd init = detail::parse_row(next_line(), "init", K, ctx());
    Eigen::MatrixXd trans(K, K), emit(K, V);
    for (int k = 0; k < K; ++k) trans.row(k) = detail::parse_row(next_line(), "trans", K, ctx());
    for (int k = 0; k < K; ++k) emit.row(k) = detail::parse_row(next_line(), "emit", V, ctx());
    return ChainModel(init, trans, emit);
}

inline NaiveBayesModel load_naive_bayes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_naive_bayes: cannot open " + path);
    return load_naive_bayes(is, path);
}

inline ChainModel load_chain(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_chain: cannot open " + path);
    return load_chain(is, path);
}

} // namespace sslx

#endif
