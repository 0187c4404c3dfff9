#include "recomb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "recomb/covariates.hpp"

namespace recomb {

namespace {

using nlohmann::json;

Article article_from_json(const json& obj, const ParseOptions& options) {
    Article a;
    a.id = obj.at("id").get<std::string>();
    a.year = obj.at("year").get<int>();
    a.journal = obj.at("journal").get<std::string>();
    a.field = obj.at("field").get<std::string>();
    a.n_authors = obj.at("n_authors").get<int>();
    if (a.id.empty()) throw std::runtime_error("empty id");
    if (a.journal.empty()) throw std::runtime_error("empty journal");
    if (a.n_authors < 1) throw std::runtime_error("n_authors < 1");
    if (a.year < options.year_min || a.year > options.year_max) {
        throw std::runtime_error("year outside corpus range");
    }

    // Countries arrive as the set of distinct codes; dedup + sort here so the
    // in-memory form is canonical no matter how the file was produced.
    std::set<std::string> countries;
    for (const auto& c : obj.at("countries")) countries.insert(c.get<std::string>());
    a.countries.assign(countries.begin(), countries.end());

    for (const auto& r : obj.at("refs")) {
        ReferenceSlot slot;
        slot.journal = r.at("journal").get<std::string>();
        slot.year = r.at("year").get<int>();
        if (slot.journal.empty()) throw std::runtime_error("empty reference journal");
        a.refs.push_back(std::move(slot));
    }
    if (obj.contains("citations") && !obj["citations"].is_null()) {
        const long long cites = obj["citations"].get<long long>();
        if (cites < 0) throw std::runtime_error("negative citations");
        a.citations = cites;
    }
    return a;
}

}  // namespace

std::uint32_t Corpus::journal_index(const std::string& name) const {
    auto it = journal_ids_.find(name);
    if (it == journal_ids_.end()) throw std::out_of_range("unknown journal: " + name);
    return it->second;
}

std::uint32_t Corpus::field_index(const std::string& name) const {
    auto it = field_ids_.find(name);
    if (it == field_ids_.end()) throw std::out_of_range("unknown field: " + name);
    return it->second;
}

void Corpus::finalize() {
    journal_names.clear();
    field_names.clear();
    journal_ids_.clear();
    field_ids_.clear();
    article_fields_.clear();

    auto intern = [](std::unordered_map<std::string, std::uint32_t>& ids,
                     std::vector<std::string>& names, const std::string& key) {
        auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(names.size()));
        if (inserted) names.push_back(key);
        return it->second;
    };

    std::size_t total_slots = 0;
    for (const auto& a : articles) total_slots += a.refs.size();

    ref_offset.clear();
    ref_journal.clear();
    ref_year.clear();
    ref_offset.reserve(articles.size() + 1);
    ref_journal.reserve(total_slots);
    ref_year.reserve(total_slots);
    article_fields_.reserve(articles.size());

    ref_offset.push_back(0);
    for (const auto& a : articles) {
        intern(journal_ids_, journal_names, a.journal);
        article_fields_.push_back(intern(field_ids_, field_names, a.field));
        for (const auto& r : a.refs) {
            ref_journal.push_back(intern(journal_ids_, journal_names, r.journal));
            ref_year.push_back(r.year);
        }
        ref_offset.push_back(ref_journal.size());
    }
}

Corpus parse_corpus_text(const std::string& text, const ParseOptions& options) {
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> seen_ids;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Article article;
        try {
            const json obj = json::parse(line);
            article = article_from_json(obj, options);
        } catch (const std::exception& e) {
            if (options.strict) {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": malformed article: " + e.what());
            }
            ++corpus.skipped_lines;
            continue;
        }
        auto [it, inserted] = seen_ids.try_emplace(article.id, line_no);
        if (!inserted) {
            throw std::runtime_error("duplicate article id \"" + article.id + "\" at line " +
                                     std::to_string(line_no) + " (first seen at line " +
                                     std::to_string(it->second) + ")");
        }
        corpus.articles.push_back(std::move(article));
    }
    corpus.finalize();
    return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus_text(std::move(buf).str(), options);
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& a : corpus.articles) {
        json obj;
        obj["id"] = a.id;
        obj["year"] = a.year;
        obj["journal"] = a.journal;
        obj["field"] = a.field;
        obj["countries"] = a.countries;
        obj["n_authors"] = a.n_authors;
        json refs = json::array();
        for (const auto& r : a.refs) refs.push_back({{"journal", r.journal}, {"year", r.year}});
        obj["refs"] = std::move(refs);
        if (a.citations) obj["citations"] = *a.citations;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::string ValidationReport::to_csv() const {
    std::ostringstream out;
    out << "check,count\n";
    out << "articles_total," << articles_total << "\n";
    out << "refs_total," << refs_total << "\n";
    out << "unpairable_articles," << unpairable_articles << "\n";
    out << "temporal_violations," << temporal_violations << "\n";
    out << "unknown_country_codes," << unknown_country_codes << "\n";
    out << "empty_country_lists," << empty_country_lists << "\n";
    out << "skipped_lines," << skipped_lines << "\n";
    return std::move(out).str();
}

ValidationReport validate(const Corpus& corpus, const GeoTables& geo) {
    ValidationReport report;
    report.articles_total = corpus.articles.size();
    report.skipped_lines = corpus.skipped_lines;
    for (const auto& a : corpus.articles) {
        report.refs_total += a.refs.size();
        if (a.refs.size() < 2) ++report.unpairable_articles;
        for (const auto& r : a.refs) {
            if (r.year > a.year) ++report.temporal_violations;
        }
        if (a.countries.empty()) ++report.empty_country_lists;
        for (const auto& c : a.countries) {
            if (!geo.knows_country(c)) ++report.unknown_country_codes;
        }
    }
    return report;
}

}  // namespace recomb
