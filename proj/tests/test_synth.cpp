#include <doctest.h>

#include <set>

#include "recomb/corpus.hpp"
#include "recomb/covariates.hpp"
#include "recomb/synth.hpp"

using namespace recomb;

TEST_SUITE("synth") {

TEST_CASE("fixed seed reproduces the corpus bitwise, any worker count") {
    SynthParams params;
    params.n_articles = 200;
    params.n_journals = 50;
    params.refs_mean = 8.0;
    params.seed = 1337;
    const std::string a = serialize_corpus(generate(params, 1));
    const std::string b = serialize_corpus(generate(params, 1));
    const std::string c = serialize_corpus(generate(params, 4));
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("different seeds differ") {
    SynthParams params;
    params.n_articles = 50;
    params.n_journals = 30;
    params.seed = 1;
    const std::string a = serialize_corpus(generate(params));
    params.seed = 2;
    const std::string b = serialize_corpus(generate(params));
    CHECK(a != b);
}

TEST_CASE("a one-article corpus generates") {
    SynthParams params;
    params.n_articles = 1;
    params.n_journals = 20;
    params.n_communities = 2;
    params.refs_mean = 5.0;
    const Corpus c = generate(params);
    CHECK(c.articles.size() == 1);
}

TEST_CASE("infeasible parameters are rejected") {
    SynthParams params;
    params.refs_mean = 600.0;
    params.n_journals = 500;
    CHECK_THROWS_AS(generate(params), std::invalid_argument);
    SynthParams bad_alpha;
    bad_alpha.alpha = 1.5;
    CHECK_THROWS_AS(generate(bad_alpha), std::invalid_argument);
    SynthParams bad_pmf;
    bad_pmf.country_pmf = {};
    CHECK_THROWS_AS(generate(bad_pmf), std::invalid_argument);
    SynthParams bad_communities;
    bad_communities.n_communities = 1000;
    bad_communities.n_journals = 100;
    CHECK_THROWS_AS(generate(bad_communities), std::invalid_argument);
}

TEST_CASE("generated articles satisfy the corpus invariants") {
    SynthParams params;
    params.n_articles = 300;
    params.n_journals = 60;
    params.n_communities = 6;
    params.n_fields = 4;
    params.refs_mean = 7.0;
    params.citing_year_min = 2003;
    params.citing_year_max = 2005;
    params.seed = 31;
    const Corpus c = generate(params);
    const GeoTables& geo = GeoTables::bundled();
    std::set<std::string> fields;
    for (const auto& a : c.articles) {
        CHECK(a.n_authors >= static_cast<int>(a.countries.size()));
        CHECK(a.countries.size() >= 1);
        CHECK(std::is_sorted(a.countries.begin(), a.countries.end()));
        for (const auto& code : a.countries) CHECK(geo.knows_country(code));
        CHECK(a.year >= 2003);
        CHECK(a.year <= 2005);
        for (const auto& ref : a.refs) CHECK(ref.year < a.year);
        CHECK(a.citations.has_value());
        fields.insert(a.field);
    }
    CHECK(fields.size() <= 4);
}

TEST_CASE("planted truth follows the sign of beta") {
    SynthParams params;
    params.beta = 0.05;
    PlantedTruth t = planted_truth(params);
    CHECK(t.countries_on_conventionality == 1);
    CHECK(t.countries_on_novelty == -1);
    CHECK(t.dominant_category == 3);

    params.beta = 0.0;
    t = planted_truth(params);
    CHECK(t.countries_on_conventionality == 0);
    CHECK(t.countries_on_novelty == 0);
    CHECK(t.dominant_category == 0);

    params.beta = -0.05;
    t = planted_truth(params);
    CHECK(t.countries_on_conventionality == -1);
    CHECK(t.countries_on_novelty == 1);
    CHECK(t.dominant_category == 2);

    params.author_coupling = 0.02;
    t = planted_truth(params);
    CHECK(t.authors_on_conventionality == 1);
    CHECK(t.authors_on_novelty == -1);
}

TEST_CASE("reference counts are overdispersed when requested") {
    SynthParams params;
    params.n_articles = 4000;
    params.n_journals = 200;
    params.refs_mean = 20.0;
    params.refs_dispersion = 2.0;
    params.seed = 8;
    const Corpus c = generate(params);
    double sum = 0.0;
    for (const auto& a : c.articles) sum += static_cast<double>(a.refs.size());
    const double mean = sum / static_cast<double>(c.articles.size());
    double ss = 0.0;
    for (const auto& a : c.articles) {
        const double d = static_cast<double>(a.refs.size()) - mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(c.articles.size() - 1);
    CHECK(mean == doctest::Approx(20.0).epsilon(0.05));
    // negative binomial with r=2: variance ~ mean + mean^2/2 = 220
    CHECK(var > 3.0 * mean);
}

TEST_CASE("params serialize to a manifest") {
    SynthParams params;
    const std::string json = synth_params_to_json(params);
    CHECK(json.find("\"refs_mean\"") != std::string::npos);
    CHECK(json.find("\"seed\"") != std::string::npos);
}

}  // TEST_SUITE
