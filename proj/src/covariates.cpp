#include "recomb/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "recomb/csv.hpp"
#include "recomb_geo_data.hpp"  // generated from data/*.csv at build time

namespace recomb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string parse_snapshot(const CsvTable& table) {
    // "# geo-tables snapshot YYYY-MM-DD"
    for (const auto& comment : table.comments) {
        const auto pos = comment.find("snapshot");
        if (pos != std::string::npos) {
            std::string date = comment.substr(pos + 8);
            const auto start = date.find_first_not_of(' ');
            if (start != std::string::npos) return date.substr(start);
        }
    }
    return "unversioned";
}

}  // namespace

const GeoTables& GeoTables::bundled() {
    static const GeoTables tables =
        GeoTables::from_csv(std::string(kContinentsCsv), std::string(kLanguagesCsv));
    return tables;
}

GeoTables GeoTables::load_dir(const std::filesystem::path& dir) {
    return from_csv(read_file(dir / "continents.csv"), read_file(dir / "languages.csv"));
}

GeoTables GeoTables::from_csv(const std::string& continents_csv,
                              const std::string& languages_csv) {
    GeoTables geo;
    const CsvTable continents = parse_csv(continents_csv);
    const std::size_t c_country = continents.column("country");
    const std::size_t c_continent = continents.column("continent");
    for (const auto& row : continents.rows) {
        if (!geo.continent_.try_emplace(row.at(c_country), row.at(c_continent)).second) {
            throw std::runtime_error("duplicate country in continents table: " +
                                     row.at(c_country));
        }
    }
    const CsvTable languages = parse_csv(languages_csv);
    const std::size_t l_country = languages.column("country");
    const std::size_t l_language = languages.column("language");
    for (const auto& row : languages.rows) {
        geo.languages_[row.at(l_country)].insert(row.at(l_language));
    }
    geo.snapshot_ = parse_snapshot(continents);
    return geo;
}

const std::string* GeoTables::continent_of(const std::string& code) const {
    const auto it = continent_.find(code);
    return it == continent_.end() ? nullptr : &it->second;
}

const std::set<std::string>* GeoTables::languages_of(const std::string& code) const {
    const auto it = languages_.find(code);
    return it == languages_.end() ? nullptr : &it->second;
}

std::vector<std::string> GeoTables::country_codes() const {
    std::vector<std::string> codes;
    codes.reserve(continent_.size());
    for (const auto& [code, continent] : continent_) codes.push_back(code);
    std::sort(codes.begin(), codes.end());
    return codes;
}

std::string GeoTables::digest() const {
    std::string canonical = snapshot_;
    for (const auto& code : country_codes()) {
        canonical += '|';
        canonical += code;
        canonical += ':';
        canonical += *continent_of(code);
        if (const auto* langs = languages_of(code)) {
            for (const auto& l : *langs) {
                canonical += ',';
                canonical += l;
            }
        }
    }
    return fnv1a64_hex(canonical);
}

std::vector<CovariateRow> derive_covariates(const Corpus& corpus, const GeoTables& geo) {
    std::vector<CovariateRow> rows;
    rows.reserve(corpus.articles.size());
    for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
        const Article& article = corpus.articles[a];
        CovariateRow row;
        row.id = article.id;
        row.countries = static_cast<int>(article.countries.size());
        row.authors = article.n_authors;
        row.references = static_cast<int>(article.refs.size());
        row.field = corpus.article_field(a);
        row.year = article.year;
        row.citations = article.citations;

        if (article.countries.empty()) {
            row.geo_ok = false;
            rows.push_back(std::move(row));
            continue;
        }
        row.log_countries = std::log(static_cast<double>(row.countries));
        row.log_authors = std::log(static_cast<double>(row.authors));

        std::set<std::string> continents;
        std::set<std::string> common_languages;
        bool first = true;
        for (const auto& code : article.countries) {
            const std::string* continent = geo.continent_of(code);
            const std::set<std::string>* langs = geo.languages_of(code);
            if (continent == nullptr || langs == nullptr) {
                row.geo_ok = false;  // unknown code: excluded from geo analyses
                break;
            }
            continents.insert(*continent);
            if (first) {
                common_languages = *langs;
                first = false;
            } else {
                std::set<std::string> kept;
                std::set_intersection(common_languages.begin(), common_languages.end(),
                                      langs->begin(), langs->end(),
                                      std::inserter(kept, kept.begin()));
                common_languages = std::move(kept);
            }
        }
        if (row.geo_ok) {
            row.continents = static_cast<int>(continents.size());
            // 1 = the member countries share no official language; a single
            // country always shares one with itself.
            row.languages = common_languages.empty() ? 1 : 0;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string covariates_to_csv(const Corpus& corpus, std::span<const CovariateRow> rows) {
    std::ostringstream out;
    out << "id,countries,authors,references,field,year,continents,languages,"
           "log_countries,log_authors,citations\n";
    for (const auto& r : rows) {
        out << csv_escape(r.id) << "," << r.countries << "," << r.authors << ","
            << r.references << "," << csv_escape(corpus.field_name(r.field)) << "," << r.year
            << ",";
        if (r.geo_ok) {
            out << r.continents << "," << r.languages << "," << format_double(r.log_countries)
                << "," << format_double(r.log_authors);
        } else {
            out << ",,,";
        }
        out << ",";
        if (r.citations) out << *r.citations;
        out << "\n";
    }
    return std::move(out).str();
}

CovariateFile covariates_from_csv(const std::string& csv) {
    const CsvTable table = parse_csv(csv);
    CovariateFile out;
    auto& rows = out.rows;
    rows.reserve(table.rows.size());
    std::unordered_map<std::string, std::uint32_t> field_ids;
    const std::size_t c_id = table.column("id");
    const std::size_t c_countries = table.column("countries");
    const std::size_t c_authors = table.column("authors");
    const std::size_t c_refs = table.column("references");
    const std::size_t c_field = table.column("field");
    const std::size_t c_year = table.column("year");
    const std::size_t c_continents = table.column("continents");
    const std::size_t c_languages = table.column("languages");
    const std::size_t c_logc = table.column("log_countries");
    const std::size_t c_loga = table.column("log_authors");
    const std::size_t c_cites = table.column("citations");
    for (const auto& r : table.rows) {
        CovariateRow row;
        row.id = r.at(c_id);
        row.countries = std::stoi(r.at(c_countries));
        row.authors = std::stoi(r.at(c_authors));
        row.references = std::stoi(r.at(c_refs));
        const auto [fit, inserted] = field_ids.try_emplace(
            r.at(c_field), static_cast<std::uint32_t>(out.field_names.size()));
        if (inserted) out.field_names.push_back(r.at(c_field));
        row.field = fit->second;
        row.year = std::stoi(r.at(c_year));
        if (r.at(c_continents).empty()) {
            row.geo_ok = false;
        } else {
            row.continents = std::stoi(r.at(c_continents));
            row.languages = std::stoi(r.at(c_languages));
            row.log_countries = parse_double_cell(r.at(c_logc));
            row.log_authors = parse_double_cell(r.at(c_loga));
        }
        if (!r.at(c_cites).empty()) row.citations = std::stoll(r.at(c_cites));
        rows.push_back(std::move(row));
    }
    return out;
}

std::span<const double> AnalysisTable::column(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no such analysis column: " + name);
    return columns_[it->second];
}

void AnalysisTable::add_column(const std::string& name) {
    const auto [it, inserted] = index_.try_emplace(name, columns_.size());
    if (!inserted) throw std::runtime_error("duplicate analysis column: " + name);
    names_.push_back(name);
    columns_.emplace_back();
}

std::vector<double>& AnalysisTable::column_mut(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no such analysis column: " + name);
    return columns_[it->second];
}

namespace {

struct ProfileView {
    std::string id;
    double z10 = kNaN;
    double zmed = kNaN;
    double novelty_bin = kNaN;
    double conventionality_bin = kNaN;
    double category = kNaN;
};

JoinResult join_core(std::span<const ProfileView> profiles,
                     std::span<const CovariateRow> covariates,
                     std::span<const std::string> covariate_field_names) {
    std::unordered_map<std::string, std::size_t> profile_by_id;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (!profile_by_id.try_emplace(profiles[i].id, i).second) {
            throw std::runtime_error("duplicate article id among profiles: " + profiles[i].id);
        }
    }
    std::unordered_map<std::string, std::size_t> covariate_by_id;
    for (std::size_t i = 0; i < covariates.size(); ++i) {
        if (!covariate_by_id.try_emplace(covariates[i].id, i).second) {
            throw std::runtime_error("duplicate article id among covariate rows: " +
                                     covariates[i].id);
        }
    }

    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> matched;
    JoinResult result;
    for (const auto& [id, pi] : profile_by_id) {
        const auto it = covariate_by_id.find(id);
        if (it == covariate_by_id.end()) {
            ++result.dropped_profiles;
            continue;
        }
        matched.push_back({id, {pi, it->second}});
    }
    result.dropped_covariates = covariate_by_id.size() - matched.size();
    std::sort(matched.begin(), matched.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    AnalysisTable& t = result.table;
    for (const char* name :
         {"z10", "zmed", "novelty", "conventionality", "novelty_bin", "conventionality_bin",
          "category", "countries", "authors", "references", "continents", "languages",
          "log_countries", "log_authors", "citations"}) {
        t.add_column(name);
    }
    auto& z10 = t.column_mut("z10");
    auto& zmed = t.column_mut("zmed");
    auto& novelty = t.column_mut("novelty");
    auto& conventionality = t.column_mut("conventionality");
    auto& novelty_bin = t.column_mut("novelty_bin");
    auto& conventionality_bin = t.column_mut("conventionality_bin");
    auto& category = t.column_mut("category");
    auto& countries = t.column_mut("countries");
    auto& authors = t.column_mut("authors");
    auto& references = t.column_mut("references");
    auto& continents = t.column_mut("continents");
    auto& languages = t.column_mut("languages");
    auto& log_countries = t.column_mut("log_countries");
    auto& log_authors = t.column_mut("log_authors");
    auto& citations = t.column_mut("citations");

    std::unordered_map<std::uint32_t, std::uint32_t> field_remap;
    for (const auto& [id, idx] : matched) {
        const ProfileView& p = profiles[idx.first];
        const CovariateRow& c = covariates[idx.second];
        t.ids.push_back(id);
        const auto [fit, inserted] =
            field_remap.try_emplace(c.field, static_cast<std::uint32_t>(t.field_names.size()));
        if (inserted) t.field_names.push_back(covariate_field_names[c.field]);
        t.field.push_back(fit->second);
        t.year.push_back(c.year);

        z10.push_back(p.z10);
        zmed.push_back(p.zmed);
        novelty.push_back(-p.z10);
        conventionality.push_back(p.zmed);
        novelty_bin.push_back(p.novelty_bin);
        conventionality_bin.push_back(p.conventionality_bin);
        category.push_back(p.category);
        countries.push_back(c.countries == 0 ? kNaN : c.countries);
        authors.push_back(c.authors);
        references.push_back(c.references);
        continents.push_back(c.geo_ok ? c.continents : kNaN);
        languages.push_back(c.geo_ok ? c.languages : kNaN);
        log_countries.push_back(c.geo_ok ? c.log_countries : kNaN);
        log_authors.push_back(c.geo_ok ? c.log_authors : kNaN);
        citations.push_back(c.citations ? static_cast<double>(*c.citations) : kNaN);
    }
    return result;
}

}  // namespace

JoinResult join(const Corpus& corpus, std::span<const ArticleScore> profiles,
                std::span<const CovariateRow> covariates) {
    std::vector<ProfileView> views;
    views.reserve(profiles.size());
    for (const auto& p : profiles) {
        if (!p.scored) continue;
        ProfileView v;
        v.id = corpus.articles[p.article].id;
        v.z10 = p.z10;
        v.zmed = p.zmed;
        v.novelty_bin = p.novelty_bin < 0 ? kNaN : p.novelty_bin;
        v.conventionality_bin = p.conventionality_bin < 0 ? kNaN : p.conventionality_bin;
        v.category = p.category < 0 ? kNaN : p.category;
        views.push_back(std::move(v));
    }
    return join_core(views, covariates, corpus.field_names);
}

JoinResult join_csv(const std::string& article_scores_csv, const std::string& covariates_csv) {
    const CsvTable scores = parse_csv(article_scores_csv);
    std::vector<ProfileView> views;
    views.reserve(scores.rows.size());
    const std::size_t c_id = scores.column("id");
    const std::size_t c_z10 = scores.column("z10");
    const std::size_t c_zmed = scores.column("zmed");
    const std::size_t c_nb = scores.column("novelty_bin");
    const std::size_t c_cb = scores.column("conventionality_bin");
    const std::size_t c_cat = scores.column("category");
    for (const auto& r : scores.rows) {
        ProfileView v;
        v.id = r.at(c_id);
        v.z10 = parse_double_cell(r.at(c_z10));
        v.zmed = parse_double_cell(r.at(c_zmed));
        v.novelty_bin = parse_double_cell(r.at(c_nb));
        v.conventionality_bin = parse_double_cell(r.at(c_cb));
        v.category = parse_double_cell(r.at(c_cat));
        views.push_back(std::move(v));
    }
    const CovariateFile cov = covariates_from_csv(covariates_csv);
    return join_core(views, cov.rows, cov.field_names);
}

}  // namespace recomb
