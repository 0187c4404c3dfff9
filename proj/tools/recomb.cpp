// recomb: measure novelty and conventionality of journal co-citation
// behavior in bibliographic corpora, then relate them to collaboration
// covariates through a standard regression battery.
//
// Pipeline: ingest -> score -> classify -> covariates -> regress -> report,
// plus synth (test corpora) and oracle-null (exact null on small corpora).
// Every stage writes a run manifest; artifacts embed the manifest digest.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recomb/common.hpp"
#include "recomb/corpus.hpp"
#include "recomb/covariates.hpp"
#include "recomb/csv.hpp"
#include "recomb/inference.hpp"
#include "recomb/manifest.hpp"
#include "recomb/nullmodel.hpp"
#include "recomb/pairs.hpp"
#include "recomb/report.hpp"
#include "recomb/scores.hpp"
#include "recomb/synth.hpp"

namespace fs = std::filesystem;
using namespace recomb;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 42;
    int workers = 0;  // 0 = all cores
    std::string out = "out";

    int effective_workers() const { return workers > 0 ? workers : default_workers(); }
    fs::path out_dir() const { return fs::path(out); }
};

void add_global_flags(CLI::App* cmd, GlobalOptions& g) {
    cmd->add_option("--seed", g.seed, "RNG seed");
    cmd->add_option("--workers", g.workers, "worker threads (0 = all cores)");
    cmd->add_option("--out", g.out, "artifact directory");
}

void write_artifact(const fs::path& path, const RunManifest& manifest,
                    const std::string& body) {
    write_file_atomic(path, manifest.artifact_header() + body);
}

std::string require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw std::runtime_error("missing artifact " + path.string() + "; run `recomb " +
                                 producer + "` first");
    }
    return read_file(path);
}

GeoTables load_geo(const std::string& geo_dir) {
    return geo_dir.empty() ? GeoTables::bundled() : GeoTables::load_dir(geo_dir);
}

PairOptions parse_pair_options(const std::string& pair_mode, const std::string& self_pairs) {
    PairOptions options;
    if (pair_mode == "multiset") options.mode = PairMode::multiset;
    else if (pair_mode == "dedup") options.mode = PairMode::dedup;
    else throw std::runtime_error("bad --pair-mode: " + pair_mode);
    if (self_pairs == "include") options.self = SelfPairs::include;
    else if (self_pairs == "exclude") options.self = SelfPairs::exclude;
    else throw std::runtime_error("bad --self-pairs: " + self_pairs);
    return options;
}

// ---------------------------------------------------------------------------
// subcommand bodies

int run_ingest(const GlobalOptions& g, const std::string& corpus_path, bool strict,
               const std::string& normalize_to) {
    const Corpus corpus = parse_corpus(corpus_path, ParseOptions{strict});
    RunManifest manifest("ingest");
    manifest.set("strict", strict ? "1" : "0");
    manifest.add_input_digest("corpus", corpus_path);

    std::ostringstream summary;
    summary << "check,count\n";
    summary << "articles," << corpus.articles.size() << "\n";
    summary << "journals," << corpus.n_journals() << "\n";
    summary << "fields," << corpus.n_fields() << "\n";
    summary << "reference_slots," << corpus.n_slots() << "\n";
    summary << "skipped_lines," << corpus.skipped_lines << "\n";
    write_artifact(g.out_dir() / "ingest_summary.csv", manifest, summary.str());
    if (!normalize_to.empty()) {
        write_file_atomic(normalize_to, serialize_corpus(corpus));
    }
    manifest.save(g.out_dir() / "manifest_ingest.json");
    std::cout << "ingested " << corpus.articles.size() << " articles ("
              << corpus.skipped_lines << " lines skipped)\n";
    return 0;
}

int run_validate(const GlobalOptions& g, const std::string& corpus_path,
                 const std::string& geo_dir) {
    const Corpus corpus = parse_corpus(corpus_path, ParseOptions{});
    const GeoTables geo = load_geo(geo_dir);
    const ValidationReport report = validate(corpus, geo);
    RunManifest manifest("validate");
    manifest.add_input_digest("corpus", corpus_path);
    manifest.set("geo_snapshot", geo.snapshot());
    manifest.set("geo_digest", geo.digest());
    write_artifact(g.out_dir() / "validation.csv", manifest, report.to_csv());
    manifest.save(g.out_dir() / "manifest_validate.json");
    std::cout << report.to_csv();
    return 0;
}

int run_score(const GlobalOptions& g, const std::string& corpus_path, std::uint32_t realizations,
              const std::string& pair_mode, const std::string& self_pairs, bool dump_nullstats,
              bool dump_pairs, bool with_k50, bool with_commonality) {
    const Corpus corpus = parse_corpus(corpus_path, ParseOptions{});
    const PairOptions options = parse_pair_options(pair_mode, self_pairs);
    const int workers = g.effective_workers();

    const PairCounts counts = count_pairs(corpus, options, workers);
    const NullStats nulls = null_distribution(corpus, counts, realizations, g.seed, workers);
    const PairScoreTable ztable = pair_zscores(counts, nulls);
    const std::vector<ArticleScore> profiles = article_profiles(corpus, counts, ztable, workers);

    RunManifest manifest("score");
    manifest.add_input_digest("corpus", corpus_path);
    manifest.set("seed", g.seed);
    manifest.set("realizations", static_cast<std::uint64_t>(realizations));
    manifest.set("strata_rule", "citing_year,cited_year");
    manifest.set("sigma_convention", "population (divide by R)");
    manifest.set("sigma_substitution", "1/(2R) when sd = 0");
    manifest.set("percentile_rule", "linear interpolation at p*(n-1), zero-based");
    manifest.set("pair_mode", pair_mode);
    manifest.set("self_pairs", self_pairs);

    std::size_t unscored = 0;
    std::ostringstream zs;
    zs << "id,field,n_pairs,z10,zmed\n";
    for (const auto& p : profiles) {
        if (!p.scored) {
            ++unscored;
            continue;
        }
        zs << csv_escape(corpus.articles[p.article].id) << ","
           << csv_escape(corpus.field_name(corpus.article_field(p.article))) << "," << p.n_pairs
           << "," << format_double(p.z10) << "," << format_double(p.zmed) << "\n";
    }
    manifest.set("unscored_articles", static_cast<std::uint64_t>(unscored));
    write_artifact(g.out_dir() / "article_zscores.csv", manifest, zs.str());

    if (dump_pairs) {
        write_artifact(g.out_dir() / "pairs.csv", manifest, pairs_to_csv(corpus, counts));
    }
    if (dump_nullstats) {
        std::string body = nullstats_to_csv(corpus, counts, nulls);
        if (with_k50 || with_commonality) {
            // Extend the dump with the marginal-based metrics.
            const std::vector<double> k50 = with_k50 ? k50_scores(counts) : std::vector<double>{};
            const std::vector<double> commonality =
                with_commonality ? commonality_scores(counts) : std::vector<double>{};
            std::ostringstream extended;
            extended << "journal_a,journal_b,obs,null_mean,null_sd,z";
            if (with_k50) extended << ",k50";
            if (with_commonality) extended << ",commonality";
            extended << ",R,seed\n";
            std::vector<std::size_t> order(counts.n_pairs());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            auto names = [&](std::size_t i) {
                const std::string& x = corpus.journal_name(pair_lo(counts.keys[i]));
                const std::string& y = corpus.journal_name(pair_hi(counts.keys[i]));
                return x <= y ? std::make_pair(x, y) : std::make_pair(y, x);
            };
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return names(a) < names(b); });
            for (const std::size_t i : order) {
                const auto [a, b] = names(i);
                extended << a << "," << b << "," << counts.counts[i] << ","
                         << format_double(nulls.mean[i]) << "," << format_double(nulls.sd[i])
                         << "," << format_double(ztable.z[i]);
                if (with_k50) extended << "," << format_double(k50[i]);
                if (with_commonality) extended << "," << format_double(commonality[i]);
                extended << "," << nulls.R << "," << nulls.seed << "\n";
            }
            body = std::move(extended).str();
        }
        write_artifact(g.out_dir() / "nullstats.csv", manifest, body);
    }
    manifest.save(g.out_dir() / "manifest_score.json");
    std::cout << "scored " << (profiles.size() - unscored) << " articles over "
              << counts.n_pairs() << " pairs (R=" << realizations << ", seed=" << g.seed
              << ")\n";
    return 0;
}

int run_classify(const GlobalOptions& g, const std::string& median_scope) {
    const std::string zcsv =
        require_artifact(g.out_dir() / "article_zscores.csv", "score --corpus <path>");
    const CsvTable table = parse_csv(zcsv);
    const std::size_t c_id = table.column("id");
    const std::size_t c_field = table.column("field");
    const std::size_t c_np = table.column("n_pairs");
    const std::size_t c_z10 = table.column("z10");
    const std::size_t c_zmed = table.column("zmed");

    SplitScope scope;
    if (median_scope == "corpus") scope = SplitScope::corpus;
    else if (median_scope == "field") scope = SplitScope::field;
    else throw std::runtime_error("bad --median-scope: " + median_scope);

    std::vector<double> z10s;
    std::vector<double> zmeds;
    std::vector<std::uint32_t> fields;
    std::vector<std::string> field_names;
    std::unordered_map<std::string, std::uint32_t> field_ids;
    for (const auto& row : table.rows) {
        z10s.push_back(parse_double_cell(row.at(c_z10)));
        zmeds.push_back(parse_double_cell(row.at(c_zmed)));
        const auto [it, inserted] = field_ids.try_emplace(
            row.at(c_field), static_cast<std::uint32_t>(field_names.size()));
        if (inserted) field_names.push_back(row.at(c_field));
        fields.push_back(it->second);
    }
    const SplitThreshold threshold =
        split_threshold_values(zmeds, fields, scope, field_names.size());
    for (const std::uint32_t f : threshold.empty_fields) {
        std::cerr << "warning: field " << field_names[f] << " has no scored articles\n";
    }

    RunManifest manifest("classify");
    manifest.set("median_scope", median_scope);
    manifest.set("novelty_rule", "novelty_bin = 1 iff z10 < 0");
    manifest.set("conventionality_rule", "conventionality_bin = 1 iff zmed >= threshold");
    if (scope == SplitScope::corpus) manifest.set("threshold", threshold.corpus_value);

    CategoryShares shares;
    std::ostringstream out;
    out << "id,n_pairs,z10,zmed,novelty,novelty_bin,conventionality_bin,category\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const double cut = threshold.value_for(fields[i]);
        const BinAssignment bin = classify_one(z10s[i], zmeds[i], cut);
        out << csv_escape(table.rows[i].at(c_id)) << "," << table.rows[i].at(c_np) << ","
            << format_double(z10s[i]) << "," << format_double(zmeds[i]) << ","
            << format_double(-z10s[i]) << "," << bin.novelty_bin << ","
            << bin.conventionality_bin << "," << bin.category << "\n";
        ++shares.counts[static_cast<std::size_t>(bin.category - 1)];
        ++shares.total;
    }
    write_artifact(g.out_dir() / "article_scores.csv", manifest, out.str());

    std::ostringstream sh;
    sh << "category,count,share\n";
    for (int c = 1; c <= 4; ++c) {
        sh << c << "," << shares.counts[c - 1] << "," << format_double(shares.share(c)) << "\n";
    }
    write_artifact(g.out_dir() / "category_shares.csv", manifest, sh.str());
    manifest.save(g.out_dir() / "manifest_classify.json");
    std::cout << sh.str();
    return 0;
}

int run_covariates(const GlobalOptions& g, const std::string& corpus_path,
                   const std::string& geo_dir) {
    const Corpus corpus = parse_corpus(corpus_path, ParseOptions{});
    const GeoTables geo = load_geo(geo_dir);
    const std::vector<CovariateRow> rows = derive_covariates(corpus, geo);
    RunManifest manifest("covariates");
    manifest.add_input_digest("corpus", corpus_path);
    manifest.set("geo_snapshot", geo.snapshot());
    manifest.set("geo_digest", geo.digest());
    manifest.set("language_rule",
                 "languages = 1 iff intersection of official language sets is empty");
    std::size_t geo_flagged = 0;
    for (const auto& r : rows) {
        if (!r.geo_ok) ++geo_flagged;
    }
    manifest.set("geo_flagged_rows", static_cast<std::uint64_t>(geo_flagged));
    write_artifact(g.out_dir() / "covariates.csv", manifest, covariates_to_csv(corpus, rows));
    manifest.save(g.out_dir() / "manifest_covariates.json");
    std::cout << "derived covariates for " << rows.size() << " articles (" << geo_flagged
              << " flagged for unknown geography)\n";
    return 0;
}

const std::vector<std::string> kTable1Variables = {
    "novelty", "novelty_bin", "conventionality", "conventionality_bin",
    "countries", "authors", "references"};

int run_regress(const GlobalOptions& g, const std::string& model, const std::string& dv,
                const std::string& covariate_list, const std::string& fe,
                const std::string& subset, const std::string& name,
                const std::string& scores_file, const std::string& covariates_file) {
    const fs::path scores_path =
        scores_file.empty() ? g.out_dir() / "article_scores.csv" : fs::path(scores_file);
    const fs::path cov_path =
        covariates_file.empty() ? g.out_dir() / "covariates.csv" : fs::path(covariates_file);
    const std::string scores_csv =
        require_artifact(scores_path, "classify --median-scope <corpus|field>");
    const std::string cov_csv =
        require_artifact(cov_path, "covariates --corpus <path>");
    const JoinResult joined = join_csv(scores_csv, cov_csv);

    RunManifest manifest("regress");
    manifest.add_input_digest("article_scores", scores_path);
    manifest.add_input_digest("covariates", cov_path);
    manifest.set("model", model);
    manifest.set("dv", dv);
    manifest.set("covariates", covariate_list);
    manifest.set("fe", fe);
    manifest.set("subset", subset);
    manifest.set("se_convention", "classical (non-robust)");
    manifest.set("wald_convention", "joint chi-square on all non-intercept coefficients");
    manifest.set("r2_convention", "1 - SSR/SST against the undemeaned dv");
    manifest.set("joined_rows", static_cast<std::uint64_t>(joined.table.n_rows()));
    manifest.set("dropped_profiles", static_cast<std::uint64_t>(joined.dropped_profiles));
    manifest.set("dropped_covariates", static_cast<std::uint64_t>(joined.dropped_covariates));

    // Descriptives ride along on every regress run so table1 renders without
    // a dedicated stage.
    const Descriptives desc = describe(joined.table, kTable1Variables);
    write_artifact(g.out_dir() / "descriptives.csv", manifest, descriptives_to_csv(desc));
    write_artifact(g.out_dir() / "correlations.csv", manifest, correlations_to_csv(desc));

    ModelSpec spec;
    spec.dv = dv;
    spec.fe = fe_from_string(fe);
    spec.subset = subset;
    std::stringstream list(covariate_list);
    std::string item;
    while (std::getline(list, item, ',')) {
        if (!item.empty()) spec.covariates.push_back(item);
    }

    RegressionResult result;
    if (model == "ols") result = ols(joined.table, spec);
    else if (model == "logit") result = logit(joined.table, spec);
    else if (model == "mnlogit") result = mnlogit(joined.table, spec);
    else throw std::runtime_error("bad --model: " + model);

    std::string stem = "regress_" + model + "_" + dv;
    if (!name.empty()) stem += "__" + name;
    write_artifact(g.out_dir() / (stem + ".csv"), manifest, regression_to_csv(result));
    manifest.save(g.out_dir() / ("manifest_" + stem + ".json"));

    std::cout << render_regression_table(stem, {{dv, result}});
    if (!result.converged) {
        std::cout << "model did not converge: " << result.note << "\n";
    }
    return 0;
}

RegressionResult load_regression(const GlobalOptions& g, const std::string& stem,
                                 const std::string& hint) {
    return regression_from_csv(require_artifact(g.out_dir() / (stem + ".csv"), hint));
}

int run_report(const GlobalOptions& g, const std::string& table, const std::string& figure,
               double bin_width) {
    if (table.empty() == figure.empty()) {
        throw std::runtime_error("report needs exactly one of --table or --figure");
    }
    RunManifest manifest("report");

    if (!table.empty()) {
        std::string rendered;
        if (table == "table1") {
            const std::string d = require_artifact(g.out_dir() / "descriptives.csv",
                                                   "regress (any model)");
            const std::string c = require_artifact(g.out_dir() / "correlations.csv",
                                                   "regress (any model)");
            rendered = render_descriptives_table("Descriptive Statistics and Correlations",
                                                 descriptives_from_csv(d, c));
        } else if (table == "table2" || table == "a5") {
            const std::string suffix = table == "a5" ? "__log" : "";
            const auto novelty = load_regression(
                g, "regress_ols_novelty" + suffix,
                "regress --model ols --dv novelty" +
                    std::string(table == "a5" ? " --covariates log_countries,log_authors,references --name log" : ""));
            const auto conventionality = load_regression(
                g, "regress_ols_conventionality" + suffix,
                "regress --model ols --dv conventionality" +
                    std::string(table == "a5" ? " --covariates log_countries,log_authors,references --name log" : ""));
            rendered = render_regression_table(
                table == "a5" ? "OLS Regression, Log-Transformed Variables"
                              : "OLS Regression Models",
                {{"Novelty", novelty}, {"Conventionality", conventionality}});
        } else if (table == "table3" || table == "a1") {
            const auto novelty = load_regression(g, "regress_logit_novelty_bin",
                                                 "regress --model logit --dv novelty_bin");
            const auto conventionality =
                load_regression(g, "regress_logit_conventionality_bin",
                                "regress --model logit --dv conventionality_bin");
            rendered = render_regression_table(
                "Logistic Regression Models",
                {{"Novelty Bin", novelty}, {"Conventionality Bin", conventionality}});
        } else if (table == "table4" || table == "a2" || table == "a6") {
            const std::string suffix = table == "a6" ? "__byfield" : "";
            std::vector<std::pair<std::string, RegressionResult>> cols;
            cols.emplace_back("All Fields",
                              load_regression(g, "regress_mnlogit_category" + suffix,
                                              "regress --model mnlogit --dv category"));
            if (table == "table4") {
                // Optional subgroup columns rendered when their artifacts exist.
                for (const auto& [slug, label] :
                     std::vector<std::pair<std::string, std::string>>{
                         {"sciences", "Sciences"},
                         {"socsci", "Social Sciences"},
                         {"arts", "Arts & Humanities"}}) {
                    const fs::path p = g.out_dir() / ("regress_mnlogit_category__" + slug + ".csv");
                    if (fs::exists(p)) {
                        cols.emplace_back(label, regression_from_csv(read_file(p)));
                    }
                }
            }
            rendered = render_regression_table("Multinomial Logistic Regression Models"
                                               + std::string(table == "a6" ? " (median split by field)" : ""),
                                               cols);
        } else if (table == "a3") {
            std::vector<std::pair<std::string, RegressionResult>> cols;
            for (const std::string dv : {"conventionality", "novelty"}) {
                for (const auto& entry : fs::directory_iterator(g.out_dir())) {
                    const std::string fname = entry.path().filename().string();
                    const std::string prefix = "regress_ols_" + dv + "__y";
                    if (fname.rfind(prefix, 0) == 0 && fname.size() > prefix.size() + 4 &&
                        fname.substr(fname.size() - 4) == ".csv") {
                        const std::string year =
                            fname.substr(prefix.size(), fname.size() - prefix.size() - 4);
                        cols.emplace_back(dv + " " + year,
                                          regression_from_csv(read_file(entry.path())));
                    }
                }
            }
            if (cols.empty()) {
                throw std::runtime_error(
                    "missing per-year artifacts; run `recomb regress --model ols --dv novelty "
                    "--subset year=YYYY --name yYYYY` (and conventionality) first");
            }
            std::sort(cols.begin(), cols.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            rendered = render_regression_table("OLS Regression Analysis by Year", cols);
        } else if (table == "a4") {
            std::vector<std::pair<std::string, RegressionResult>> cols;
            for (const std::string dv : {"conventionality", "novelty"}) {
                for (const std::string var : {"continents", "languages"}) {
                    cols.emplace_back(
                        dv + " / " + var,
                        load_regression(g, "regress_ols_" + dv + "__" + var,
                                        "regress --model ols --dv " + dv + " --covariates " +
                                            var + ",authors,references --fe field+year --name " +
                                            var));
                }
            }
            rendered = render_regression_table(
                "Two-Way Fixed Effects Regression, Continents & Languages", cols);
        } else if (table == "a7") {
            rendered = render_regression_table(
                "International Collaboration and Citations",
                {{"Citations", load_regression(g, "regress_ols_citations",
                                               "regress --model ols --dv citations")}});
        } else {
            throw std::runtime_error("unknown --table: " + table);
        }
        const fs::path path = g.out_dir() / (table + ".md");
        write_file_atomic(path, "<!-- manifest " + manifest.digest() + " -->\n" + rendered);
        manifest.save(g.out_dir() / ("manifest_report_" + table + ".json"));
        std::cout << rendered;
        return 0;
    }

    // Figures: datasets computed from score/classify/covariate artifacts.
    const std::string scores_csv =
        require_artifact(g.out_dir() / "article_scores.csv", "classify");
    const CsvTable scores = parse_csv(scores_csv);
    const std::size_t c_z10 = scores.column("z10");
    const std::size_t c_zmed = scores.column("zmed");
    manifest.set("figure", figure);
    manifest.set("bin_width", bin_width);

    std::string body;
    if (figure == "fig2" || figure == "fig3") {
        std::vector<double> values;
        values.reserve(scores.rows.size());
        for (const auto& row : scores.rows) {
            values.push_back(parse_double_cell(row.at(figure == "fig2" ? c_z10 : c_zmed)));
        }
        const auto bins = probability_histogram(values, bin_width);
        body = histogram_to_csv(bins);
    } else if (figure == "fig5" || figure == "fig6" || figure == "fig7") {
        const std::string cov_csv =
            require_artifact(g.out_dir() / "covariates.csv", "covariates --corpus <path>");
        const JoinResult joined = join_csv(scores_csv, cov_csv);
        const auto countries_col = joined.table.column("countries");
        std::vector<int> countries;
        countries.reserve(countries_col.size());
        for (const double c : countries_col) {
            countries.push_back(std::isnan(c) ? -1 : static_cast<int>(c));
        }
        if (figure == "fig7") {
            const auto category_col = joined.table.column("category");
            std::vector<int> cats;
            std::vector<int> groups;
            for (std::size_t i = 0; i < category_col.size(); ++i) {
                if (countries[i] < 0 || std::isnan(category_col[i])) continue;
                groups.push_back(countries[i]);
                cats.push_back(static_cast<int>(category_col[i]));
            }
            body = category_counts_to_csv(category_counts(groups, cats), "countries");
        } else {
            const auto value_col =
                joined.table.column(figure == "fig5" ? "novelty" : "zmed");
            std::vector<int> groups;
            std::vector<double> values;
            for (std::size_t i = 0; i < value_col.size(); ++i) {
                if (countries[i] < 0 || std::isnan(value_col[i])) continue;
                groups.push_back(countries[i]);
                values.push_back(value_col[i]);
            }
            body = group_means_to_csv(group_means(groups, values), "countries");
        }
    } else {
        throw std::runtime_error("unknown --figure: " + figure);
    }
    write_artifact(g.out_dir() / (figure + ".csv"), manifest, body);
    manifest.save(g.out_dir() / ("manifest_report_" + figure + ".json"));
    std::cout << body;
    return 0;
}

int run_synth(const GlobalOptions& g, SynthParams params, const std::string& output,
              const std::string& country_pmf_csv) {
    params.seed = g.seed;
    if (!country_pmf_csv.empty()) {
        params.country_pmf.clear();
        std::stringstream list(country_pmf_csv);
        std::string item;
        while (std::getline(list, item, ',')) params.country_pmf.push_back(std::stod(item));
    }
    const Corpus corpus = generate(params, g.effective_workers());
    const fs::path path = output.empty() ? g.out_dir() / "corpus.jsonl" : fs::path(output);
    write_file_atomic(path, serialize_corpus(corpus));
    write_file_atomic(path.string() + ".params.json", synth_params_to_json(params));
    std::cout << "wrote " << corpus.articles.size() << " articles to " << path.string() << "\n";
    return 0;
}

int run_oracle_null(const GlobalOptions& g, const std::string& corpus_path,
                    std::size_t max_stratum) {
    const Corpus corpus = parse_corpus(corpus_path, ParseOptions{});
    const PairCounts counts = count_pairs(corpus, PairOptions{});
    const ExactNull exact = exact_null(corpus, counts, max_stratum);
    RunManifest manifest("oracle-null");
    manifest.add_input_digest("corpus", corpus_path);
    manifest.set("max_stratum_slots", static_cast<std::uint64_t>(max_stratum));
    std::ostringstream out;
    out << "journal_a,journal_b,obs,exact_mean,exact_sd\n";
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        out << corpus.journal_name(pair_lo(counts.keys[p])) << ","
            << corpus.journal_name(pair_hi(counts.keys[p])) << "," << counts.counts[p] << ","
            << format_double(exact.mean[p]) << "," << format_double(exact.sd[p]) << "\n";
    }
    write_artifact(g.out_dir() / "exact_null.csv", manifest, out.str());
    manifest.save(g.out_dir() / "manifest_oracle_null.json");
    std::cout << "exact null over " << counts.n_pairs() << " pairs\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"journal co-citation novelty/conventionality toolkit"};
    app.require_subcommand(1);

    GlobalOptions g;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse and summarize a corpus");
    std::string corpus_path;
    bool strict = false;
    std::string normalize_to;
    ingest->add_option("--corpus", corpus_path, "corpus JSON Lines file")->required();
    ingest->add_flag("--strict", strict, "abort on the first malformed line");
    ingest->add_option("--normalize", normalize_to, "write canonical JSON Lines here");
    add_global_flags(ingest, g);

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "run corpus validation checks");
    std::string geo_dir;
    validate_cmd->add_option("--corpus", corpus_path, "corpus JSON Lines file")->required();
    validate_cmd->add_option("--geo-dir", geo_dir, "directory with continents.csv/languages.csv");
    add_global_flags(validate_cmd, g);

    // score
    auto* score = app.add_subcommand("score", "pair counting, null model, z-scores");
    std::uint32_t realizations = 10;
    std::string pair_mode = "multiset";
    std::string self_pairs = "include";
    bool dump_nullstats = false;
    bool dump_pairs = false;
    bool with_k50 = false;
    bool with_commonality = false;
    score->add_option("--corpus", corpus_path, "corpus JSON Lines file")->required();
    score->add_option("--realizations", realizations, "Monte Carlo realizations")
        ->default_val(10);
    score->add_option("--pair-mode", pair_mode, "multiset|dedup")->default_val("multiset");
    score->add_option("--self-pairs", self_pairs, "include|exclude")->default_val("include");
    score->add_flag("--dump-nullstats", dump_nullstats, "write nullstats.csv");
    score->add_flag("--dump-pairs", dump_pairs, "write pairs.csv");
    score->add_flag("--k50", with_k50, "add K50 column to nullstats.csv");
    score->add_flag("--commonality", with_commonality, "add commonality column to nullstats.csv");
    add_global_flags(score, g);

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "median split and categories");
    std::string median_scope = "corpus";
    classify_cmd->add_option("--median-scope", median_scope, "corpus|field")
        ->default_val("corpus");
    add_global_flags(classify_cmd, g);

    // covariates
    auto* covariates_cmd = app.add_subcommand("covariates", "derive regression covariates");
    covariates_cmd->add_option("--corpus", corpus_path, "corpus JSON Lines file")->required();
    covariates_cmd->add_option("--geo-dir", geo_dir, "geography tables directory");
    add_global_flags(covariates_cmd, g);

    // regress
    auto* regress = app.add_subcommand("regress", "fit a regression model");
    std::string model = "ols";
    std::string dv;
    std::string covariate_list = "countries,authors,references";
    std::string fe = "field";
    std::string subset;
    std::string artifact_name;
    std::string scores_file;
    std::string covariates_file;
    regress->add_option("--model", model, "ols|logit|mnlogit")->required();
    regress->add_option("--dv", dv, "dependent variable")->required();
    regress->add_option("--covariates", covariate_list, "comma-separated covariates")
        ->default_val("countries,authors,references");
    regress->add_option("--fe", fe, "none|field|field+year")->default_val("field");
    regress->add_option("--subset", subset, "e.g. field=F001|F002,year=2005");
    regress->add_option("--name", artifact_name, "artifact suffix for variants");
    regress->add_option("--scores-file", scores_file, "override article_scores.csv path");
    regress->add_option("--covariates-file", covariates_file, "override covariates.csv path");
    add_global_flags(regress, g);

    // report
    auto* report = app.add_subcommand("report", "render tables and figure datasets");
    std::string table;
    std::string figure;
    double bin_width = 1.0;
    report->add_option("--table", table, "table1..table4|a1..a7");
    report->add_option("--figure", figure, "fig2|fig3|fig5|fig6|fig7");
    report->add_option("--bin-width", bin_width, "histogram bin width")->default_val(1.0);
    add_global_flags(report, g);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    SynthParams params;
    std::string synth_output;
    std::string country_pmf_csv;
    synth->add_option("--articles", params.n_articles)->default_val(1000);
    synth->add_option("--journals", params.n_journals)->default_val(500);
    synth->add_option("--fields", params.n_fields)->default_val(10);
    synth->add_option("--communities", params.n_communities)->default_val(10);
    synth->add_option("--popularity", params.popularity_exponent)->default_val(1.0);
    synth->add_option("--alpha", params.alpha)->default_val(0.5);
    synth->add_option("--beta", params.beta)->default_val(0.0);
    synth->add_option("--author-coupling", params.author_coupling)->default_val(0.0);
    synth->add_option("--country-pmf", country_pmf_csv, "comma-separated pmf for 1,2,... countries");
    synth->add_option("--authors-extra", params.authors_extra_mean)->default_val(2.5);
    synth->add_option("--refs-mean", params.refs_mean)->default_val(22.0);
    synth->add_option("--refs-dispersion", params.refs_dispersion)->default_val(2.0);
    synth->add_option("--refs-min", params.refs_min)->default_val(0);
    synth->add_option("--year-min", params.citing_year_min)->default_val(2005);
    synth->add_option("--year-max", params.citing_year_max)->default_val(2005);
    synth->add_option("--lag-p", params.cited_lag_p)->default_val(0.25);
    synth->add_option("--lag-max", params.cited_lag_max)->default_val(8);
    synth->add_flag("!--no-citations", params.emit_citations, "omit citation counts");
    synth->add_option("--output", synth_output, "corpus output path");
    add_global_flags(synth, g);

    // oracle-null
    auto* oracle = app.add_subcommand("oracle-null", "exact null statistics (small corpora)");
    std::size_t max_stratum = 8;
    oracle->add_option("--corpus", corpus_path, "corpus JSON Lines file")->required();
    oracle->add_option("--max-stratum", max_stratum, "stratum slot bound")->default_val(8);
    add_global_flags(oracle, g);

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(g.out_dir());
        if (app.got_subcommand(ingest)) return run_ingest(g, corpus_path, strict, normalize_to);
        if (app.got_subcommand(validate_cmd)) return run_validate(g, corpus_path, geo_dir);
        if (app.got_subcommand(score)) {
            return run_score(g, corpus_path, realizations, pair_mode, self_pairs,
                             dump_nullstats, dump_pairs, with_k50, with_commonality);
        }
        if (app.got_subcommand(classify_cmd)) return run_classify(g, median_scope);
        if (app.got_subcommand(covariates_cmd)) return run_covariates(g, corpus_path, geo_dir);
        if (app.got_subcommand(regress)) {
            return run_regress(g, model, dv, covariate_list, fe, subset, artifact_name,
                               scores_file, covariates_file);
        }
        if (app.got_subcommand(report)) return run_report(g, table, figure, bin_width);
        if (app.got_subcommand(synth)) return run_synth(g, params, synth_output, country_pmf_csv);
        if (app.got_subcommand(oracle)) return run_oracle_null(g, corpus_path, max_stratum);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
