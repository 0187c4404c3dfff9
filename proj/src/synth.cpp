#include "recomb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "recomb/common.hpp"
#include "recomb/covariates.hpp"

namespace recomb {

namespace {

constexpr std::uint64_t kArticleStreamTag = 0x41525443ull;  // stream-key domain tag

void check_params(const SynthParams& p) {
    if (p.n_articles == 0) throw std::invalid_argument("n_articles must be positive");
    if (p.n_journals == 0) throw std::invalid_argument("n_journals must be positive");
    if (p.n_communities == 0 || p.n_communities > p.n_journals) {
        throw std::invalid_argument("n_communities must be in [1, n_journals]");
    }
    if (p.n_fields == 0) throw std::invalid_argument("n_fields must be positive");
    if (p.alpha < 0.0 || p.alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
    if (p.popularity_exponent < 0.0) {
        throw std::invalid_argument("popularity exponent must be >= 0");
    }
    if (p.refs_mean >= static_cast<double>(p.n_journals)) {
        throw std::invalid_argument("refs mean must be below the journal count");
    }
    if (p.country_pmf.empty()) throw std::invalid_argument("country pmf is empty");
    double mass = 0.0;
    for (const double w : p.country_pmf) {
        if (w < 0.0) throw std::invalid_argument("country pmf has negative mass");
        mass += w;
    }
    if (mass <= 0.0) throw std::invalid_argument("country pmf has zero mass");
    if (p.citing_year_min > p.citing_year_max) {
        throw std::invalid_argument("citing year range is empty");
    }
    if (p.cited_lag_p <= 0.0 || p.cited_lag_p > 1.0) {
        throw std::invalid_argument("cited lag p must be in (0,1]");
    }
    if (p.cited_lag_max < 1) throw std::invalid_argument("cited lag max must be >= 1");
}

// Per-community cumulative popularity weights; journal j of a community has
// weight (rank+1)^-s.
struct CommunityModel {
    std::vector<std::uint32_t> begin;  // community -> first journal id
    std::vector<std::uint32_t> end;
    std::vector<std::vector<double>> cumulative;

    std::uint32_t sample(std::uint32_t community, double u) const {
        const auto& cum = cumulative[community];
        const double target = u * cum.back();
        const auto it = std::upper_bound(cum.begin(), cum.end(), target);
        const auto offset = static_cast<std::uint32_t>(
            std::min<std::ptrdiff_t>(it - cum.begin(),
                                     static_cast<std::ptrdiff_t>(cum.size()) - 1));
        return begin[community] + offset;
    }
};

CommunityModel build_communities(const SynthParams& p) {
    CommunityModel model;
    const std::uint32_t C = p.n_communities;
    model.begin.resize(C);
    model.end.resize(C);
    model.cumulative.resize(C);
    for (std::uint32_t c = 0; c < C; ++c) {
        model.begin[c] = static_cast<std::uint32_t>(
            (static_cast<std::uint64_t>(c) * p.n_journals) / C);
        model.end[c] = static_cast<std::uint32_t>(
            (static_cast<std::uint64_t>(c + 1) * p.n_journals) / C);
        auto& cum = model.cumulative[c];
        double acc = 0.0;
        for (std::uint32_t j = model.begin[c]; j < model.end[c]; ++j) {
            const double rank = static_cast<double>(j - model.begin[c] + 1);
            acc += std::pow(rank, -p.popularity_exponent);
            cum.push_back(acc);
        }
    }
    return model;
}

std::string journal_name(std::uint32_t id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "J%06u", id);
    return buf;
}

std::string field_name(std::uint32_t id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "F%03u", id);
    return buf;
}

std::string article_id(std::size_t ordinal) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s%08zu", ordinal);
    return buf;
}

double standard_normal(rng::Stream& stream) {
    const double u1 = std::max(stream.uniform01(), 1e-12);
    const double u2 = stream.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang gamma(shape, 1); shape >= 1 here.
double gamma_sample(rng::Stream& stream, double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        const double x = standard_normal(stream);
        const double v0 = 1.0 + c * x;
        if (v0 <= 0.0) continue;
        const double v = v0 * v0 * v0;
        const double u = stream.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(std::max(u, 1e-300)) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

std::uint64_t sample_ref_count(rng::Stream& stream, const SynthParams& p) {
    double lambda = p.refs_mean;
    if (p.refs_dispersion > 0.0) {
        const double r = p.refs_dispersion;
        // Gamma(shape=r, scale=mean/r); boost shape up for r < 1 via the
        // standard U^(1/r) trick.
        double g;
        if (r >= 1.0) {
            g = gamma_sample(stream, r);
        } else {
            g = gamma_sample(stream, r + 1.0) *
                std::pow(std::max(stream.uniform01(), 1e-12), 1.0 / r);
        }
        lambda = g * (p.refs_mean / r);
    }
    return stream.poisson(lambda);
}

}  // namespace

Corpus generate(const SynthParams& params, int workers) {
    check_params(params);
    const CommunityModel model = build_communities(params);
    const std::vector<std::string> countries = GeoTables::bundled().country_codes();

    double pmf_mass = 0.0;
    for (const double w : params.country_pmf) pmf_mass += w;

    Corpus corpus;
    corpus.articles.resize(params.n_articles);

    parallel_for_blocks(params.n_articles, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            rng::Stream stream(params.seed, {kArticleStreamTag, static_cast<std::uint64_t>(i)});
            Article& a = corpus.articles[i];
            a.id = article_id(i);
            a.year = params.citing_year_min +
                     static_cast<int>(stream.bounded(static_cast<std::uint64_t>(
                         params.citing_year_max - params.citing_year_min + 1)));

            // Country count from the pmf, then distinct codes.
            double u = stream.uniform01() * pmf_mass;
            std::size_t n_countries = params.country_pmf.size();
            for (std::size_t c = 0; c < params.country_pmf.size(); ++c) {
                if (u < params.country_pmf[c]) {
                    n_countries = c + 1;
                    break;
                }
                u -= params.country_pmf[c];
            }
            n_countries = std::min(n_countries, countries.size());
            std::vector<std::string> picked;
            while (picked.size() < n_countries) {
                const auto& code = countries[stream.bounded(countries.size())];
                if (std::find(picked.begin(), picked.end(), code) == picked.end()) {
                    picked.push_back(code);
                }
            }
            std::sort(picked.begin(), picked.end());
            a.countries = std::move(picked);

            a.n_authors = static_cast<int>(n_countries +
                                           stream.poisson(params.authors_extra_mean));

            const auto home = static_cast<std::uint32_t>(stream.bounded(params.n_communities));
            a.field = field_name(home % params.n_fields);
            a.journal = journal_name(model.sample(home, stream.uniform01()));

            const auto k = std::max<std::uint64_t>(
                static_cast<std::uint64_t>(params.refs_min), sample_ref_count(stream, params));

            const double affinity = std::clamp(
                params.alpha + params.beta * (static_cast<double>(n_countries) - 1.0) +
                    params.author_coupling *
                        (static_cast<double>(a.n_authors) - 1.0 - params.authors_extra_mean),
                0.0, 1.0);

            a.refs.reserve(k);
            for (std::uint64_t s = 0; s < k; ++s) {
                std::uint32_t community;
                if (stream.uniform01() < affinity) {
                    community = home;
                } else {
                    community = static_cast<std::uint32_t>(stream.bounded(params.n_communities));
                }
                const std::uint32_t journal = model.sample(community, stream.uniform01());
                int lag = 1;
                const double g = stream.uniform01();
                if (params.cited_lag_p < 1.0) {
                    lag = 1 + static_cast<int>(std::floor(std::log1p(-g) /
                                                          std::log1p(-params.cited_lag_p)));
                }
                lag = std::min(lag, params.cited_lag_max);
                a.refs.push_back(ReferenceSlot{journal_name(journal), a.year - lag});
            }

            if (params.emit_citations) {
                const double noise = standard_normal(stream) * params.cite_noise_sd;
                const double cites = params.cite_base +
                                     params.cite_countries * static_cast<double>(n_countries) +
                                     params.cite_authors * a.n_authors +
                                     params.cite_refs * static_cast<double>(k) + noise;
                a.citations = static_cast<long long>(std::llround(std::max(0.0, cites)));
            }
        }
    });

    corpus.finalize();
    return corpus;
}

PlantedTruth planted_truth(const SynthParams& params) {
    PlantedTruth truth;
    auto sign = [](double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); };
    truth.countries_on_conventionality = sign(params.beta);
    truth.countries_on_novelty = -sign(params.beta);
    truth.authors_on_conventionality = sign(params.author_coupling);
    truth.authors_on_novelty = -sign(params.author_coupling);
    if (params.beta > 0.0) truth.dominant_category = 3;       // LN, HC
    else if (params.beta < 0.0) truth.dominant_category = 2;  // HN, LC
    return truth;
}

std::string synth_params_to_json(const SynthParams& p) {
    nlohmann::json j;
    j["n_articles"] = p.n_articles;
    j["n_journals"] = p.n_journals;
    j["n_fields"] = p.n_fields;
    j["n_communities"] = p.n_communities;
    j["popularity_exponent"] = p.popularity_exponent;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["author_coupling"] = p.author_coupling;
    j["country_pmf"] = p.country_pmf;
    j["authors_extra_mean"] = p.authors_extra_mean;
    j["refs_mean"] = p.refs_mean;
    j["refs_dispersion"] = p.refs_dispersion;
    j["refs_min"] = p.refs_min;
    j["citing_year_min"] = p.citing_year_min;
    j["citing_year_max"] = p.citing_year_max;
    j["cited_lag_p"] = p.cited_lag_p;
    j["cited_lag_max"] = p.cited_lag_max;
    j["emit_citations"] = p.emit_citations;
    j["cite_base"] = p.cite_base;
    j["cite_countries"] = p.cite_countries;
    j["cite_authors"] = p.cite_authors;
    j["cite_refs"] = p.cite_refs;
    j["cite_noise_sd"] = p.cite_noise_sd;
    j["seed"] = p.seed;
    return j.dump(2) + "\n";
}

}  // namespace recomb
