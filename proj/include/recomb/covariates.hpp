#pragma once

// Regression covariates derived from the corpus plus country-level geography
// tables (continent membership, official languages). The tables ship as
// editable CSVs and are also compiled in as defaults; the snapshot date rides
// along in the run manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "recomb/corpus.hpp"
#include "recomb/scores.hpp"

namespace recomb {

class GeoTables {
public:
    // Compiled-in snapshot of data/continents.csv and data/languages.csv.
    static const GeoTables& bundled();
    // Reads continents.csv and languages.csv from a directory.
    static GeoTables load_dir(const std::filesystem::path& dir);
    static GeoTables from_csv(const std::string& continents_csv,
                              const std::string& languages_csv);

    bool knows_country(const std::string& code) const {
        return continent_.count(code) != 0;
    }
    const std::string* continent_of(const std::string& code) const;
    const std::set<std::string>* languages_of(const std::string& code) const;
    std::vector<std::string> country_codes() const;

    const std::string& snapshot() const { return snapshot_; }
    std::string digest() const;

private:
    std::unordered_map<std::string, std::string> continent_;
    std::unordered_map<std::string, std::set<std::string>> languages_;
    std::string snapshot_ = "unversioned";
};

struct CovariateRow {
    std::string id;
    int countries = 0;
    int authors = 0;
    int references = 0;
    std::uint32_t field = 0;
    int year = 0;
    // Geography-dependent values; meaningless when geo_ok is false.
    int continents = 0;
    int languages = 0;  // 1 = the group shares no official language
    double log_countries = 0.0;
    double log_authors = 0.0;
    std::optional<long long> citations;
    bool geo_ok = true;  // false: unknown country code or empty country list
};

std::vector<CovariateRow> derive_covariates(const Corpus& corpus, const GeoTables& geo);

std::string covariates_to_csv(const Corpus& corpus, std::span<const CovariateRow> rows);

struct CovariateFile {
    std::vector<CovariateRow> rows;
    std::vector<std::string> field_names;  // dense index -> label, file order
};
CovariateFile covariates_from_csv(const std::string& csv);

// Column-oriented analysis table: one row per article that survived the inner
// join, sorted by id. Missing values are NaN and regressions apply listwise
// deletion over the columns they actually use.
class AnalysisTable {
public:
    std::vector<std::string> ids;
    std::vector<std::uint32_t> field;  // dense index into field_names
    std::vector<std::string> field_names;
    std::vector<int> year;

    std::size_t n_rows() const { return ids.size(); }
    bool has_column(const std::string& name) const { return index_.count(name) != 0; }
    std::span<const double> column(const std::string& name) const;
    void add_column(const std::string& name);
    // Valid until the next add_column call.
    std::vector<double>& column_mut(const std::string& name);
    std::vector<std::string> column_names() const { return names_; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

struct JoinResult {
    AnalysisTable table;
    std::size_t dropped_profiles = 0;    // scored profiles without covariates
    std::size_t dropped_covariates = 0;  // covariate rows without a profile
};

// Inner join on article id; duplicate ids on either side are an error.
JoinResult join(const Corpus& corpus, std::span<const ArticleScore> profiles,
                std::span<const CovariateRow> covariates);

// Same join over the CSV artifacts (article_scores.csv + covariates.csv).
JoinResult join_csv(const std::string& article_scores_csv, const std::string& covariates_csv);

}  // namespace recomb
