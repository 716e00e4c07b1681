#include <doctest.h>

#include <sstream>

#include "sslx/fixtures.hpp"
#include "sslx/io.hpp"

using namespace sslx;

TEST_CASE("bag-of-words corpus round-trips byte for byte") {
    NaiveBayesModel m = standard_nb_fixture();
    Rng rng(600);
    Dataset d = m.sample_dataset(30, LabelingPolicy::all_or_nothing(0.4), rng);

    std::ostringstream first;
    save_corpus(d, Dataset::Kind::BagOfWords, first);
    std::istringstream in(first.str());
    Dataset back = load_corpus(in, "mem");
    CHECK(back.num_labels == d.num_labels);
    CHECK(back.vocab == d.vocab);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.samples[i].counts == d.samples[i].counts);
        CHECK(back.samples[i].labels == d.samples[i].labels);
    }
    std::ostringstream second;
    save_corpus(back, Dataset::Kind::BagOfWords, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("sequence corpus round-trips byte for byte") {
    ChainModel m = standard_chain_fixture();
    Rng rng(601);
    Dataset d = m.sample_dataset(25, LabelingPolicy::thirds(),
                                 LengthDistribution{{3, 5}, {0.5, 0.5}}, rng);

    std::ostringstream first;
    save_corpus(d, Dataset::Kind::Sequence, first);
    std::istringstream in(first.str());
    Dataset back = load_corpus(in, "mem");
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.samples[i].tokens == d.samples[i].tokens);
        CHECK(back.samples[i].labels == d.samples[i].labels);
    }
    std::ostringstream second;
    save_corpus(back, Dataset::Kind::Sequence, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("a small mixed corpus parses as written") {
    std::istringstream in(
        "bow 2 3\n"
        "0\t0:2 2:1\n"
        "?\t1:4\n"
        "1\t\n");
    Dataset d = load_corpus(in, "mini");
    REQUIRE(d.size() == 3);
    CHECK(d.samples[0].counts == std::vector<int>{2, 0, 1});
    CHECK(d.samples[0].class_label() == 0);
    CHECK_FALSE(d.samples[1].is_labeled());
    CHECK(d.samples[1].counts == std::vector<int>{0, 4, 0});
    CHECK(d.samples[2].class_label() == 1);
    CHECK(d.samples[2].counts == std::vector<int>{0, 0, 0});
}

TEST_CASE("partially labeled sequences parse position by position") {
    std::istringstream in(
        "conll 2 2\n"
        "0\t1\n"
        "1\t?\n"
        "0\t0\n"
        "\n"
        "1\t?\n"
        "\n");
    Dataset d = load_corpus(in, "mini");
    REQUIRE(d.size() == 2);
    CHECK(d.samples[0].tokens == std::vector<int>{0, 1, 0});
    CHECK(d.samples[0].labels == LabelObservation::subset({0, 2}, {1, 0}));
    CHECK(d.samples[1].labels.empty());
}

TEST_CASE("malformed corpus lines report path and line number") {
    auto load = [](const std::string& text) {
        std::istringstream in(text);
        return load_corpus(in, "f.txt");
    };
    CHECK_THROWS_WITH_AS(load("bogus 2 3\n"), doctest::Contains("f.txt:1"), DataError);
    CHECK_THROWS_WITH_AS(load("bow 2 3\n0\t5:1\n"), doctest::Contains("f.txt:2"), DataError);
    CHECK_THROWS_WITH_AS(load("bow 2 3\n7\t0:1\n"), doctest::Contains("label out of range"),
                         DataError);
    CHECK_THROWS_WITH_AS(load("bow 2 3\n0\t2:1 1:1\n"), doctest::Contains("sorted"), DataError);
    CHECK_THROWS_WITH_AS(load("bow 2 3\n0\t1:0\n"), doctest::Contains("nonpositive"), DataError);
    CHECK_THROWS_WITH_AS(load("bow 2 3\nmissing tab\n"), doctest::Contains("tab"), DataError);
    CHECK_THROWS_WITH_AS(load("conll 2 2\n0\t9\n\n"), doctest::Contains("f.txt:2"), DataError);
    CHECK_THROWS_WITH_AS(load("conll 2 2\n4\t0\n\n"), doctest::Contains("alphabet"), DataError);
}

TEST_CASE("empty input yields an empty dataset") {
    std::istringstream in("");
    Dataset d = load_corpus(in, "empty");
    CHECK(d.empty());
}

TEST_CASE("saving with the wrong format is rejected") {
    Dataset d;
    d.kind = Dataset::Kind::BagOfWords;
    std::ostringstream os;
    CHECK_THROWS_AS(save_corpus(d, Dataset::Kind::Sequence, os), std::invalid_argument);
}

TEST_CASE("withholding labels moves them into the hidden truth") {
    NaiveBayesModel m = standard_nb_fixture();
    Rng rng(602);
    Dataset d = m.sample_dataset(10, LabelingPolicy::all_or_nothing(1.0), rng);
    std::vector<int> labels;
    for (const auto& s : d.samples) labels.push_back(s.class_label());
    withhold_labels(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK_FALSE(d.samples[i].is_labeled());
        CHECK(d.samples[i].true_labels == std::vector<int>{labels[i]});
    }

    Dataset partial = m.sample_dataset(10, LabelingPolicy::all_or_nothing(0.5), rng);
    CHECK_THROWS_AS(withhold_labels(partial), std::invalid_argument);
}

TEST_CASE("model files round-trip bit exactly") {
    NaiveBayesModel nb = standard_nb_fixture();
    std::ostringstream os;
    save_model(nb, os);
    std::istringstream in(os.str());
    NaiveBayesModel back = load_naive_bayes(in, "mem");
    CHECK(back.doc_length() == nb.doc_length());
    for (int c = 0; c < nb.num_classes(); ++c) {
        CHECK(back.prior()[c] == nb.prior()[c]);
        for (int v = 0; v < nb.vocab(); ++v)
            CHECK(back.conditionals()(c, v) == nb.conditionals()(c, v));
    }

    ChainModel chain = standard_chain_fixture();
    std::ostringstream cos;
    save_model(chain, cos);
    std::istringstream cin(cos.str());
    ChainModel cback = load_chain(cin, "mem");
    for (int k = 0; k < chain.num_states(); ++k) {
        CHECK(cback.initial()[k] == chain.initial()[k]);
        for (int j = 0; j < chain.num_states(); ++j)
            CHECK(cback.transition()(k, j) == chain.transition()(k, j));
        for (int v = 0; v < chain.vocab(); ++v)
            CHECK(cback.emission()(k, v) == chain.emission()(k, v));
    }

    std::istringstream bad("naive_bayes 2 2\n");
    CHECK_THROWS_AS(load_naive_bayes(bad, "bad"), DataError);
}
