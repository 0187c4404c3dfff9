#pragma once

// Canonical bibliographic data model. A corpus is parsed once, indices are
// densified, and the result is immutable from then on; every downstream stage
// shares it read-only.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace recomb {

struct ReferenceSlot {
    std::string journal;
    int year = 0;  // publication year of the cited work
};

struct Article {
    std::string id;
    int year = 0;  // citing year
    std::string journal;
    std::string field;
    std::vector<std::string> countries;  // deduplicated, sorted
    int n_authors = 1;
    std::vector<ReferenceSlot> refs;
    std::optional<long long> citations;
};

struct ParseOptions {
    bool strict = false;
    int year_min = std::numeric_limits<int>::min();
    int year_max = std::numeric_limits<int>::max();
};

class Corpus {
public:
    std::vector<Article> articles;

    // journal-id <-> dense index bijection, in order of first appearance
    // (article venues first, then reference slots, scanning in file order).
    std::vector<std::string> journal_names;
    std::vector<std::string> field_names;

    // CSR view of reference slots with dense journal indices; used by the
    // pair/null machinery so the hot loops never touch strings.
    std::vector<std::uint64_t> ref_offset;   // size = articles.size() + 1
    std::vector<std::uint32_t> ref_journal;  // size = total slots
    std::vector<std::int32_t> ref_year;      // size = total slots

    std::size_t skipped_lines = 0;

    std::uint32_t journal_index(const std::string& name) const;
    std::uint32_t field_index(const std::string& name) const;
    const std::string& journal_name(std::uint32_t idx) const { return journal_names.at(idx); }
    const std::string& field_name(std::uint32_t idx) const { return field_names.at(idx); }
    std::uint32_t article_field(std::size_t article) const { return article_fields_[article]; }
    std::size_t n_journals() const { return journal_names.size(); }
    std::size_t n_fields() const { return field_names.size(); }
    std::size_t n_slots() const { return ref_journal.size(); }
    std::size_t refs_begin(std::size_t article) const { return ref_offset[article]; }
    std::size_t refs_end(std::size_t article) const { return ref_offset[article + 1]; }
    std::size_t refs_count(std::size_t article) const {
        return ref_offset[article + 1] - ref_offset[article];
    }

    // Rebuilds dense indices and the CSR arrays from `articles`.
    void finalize();

private:
    std::unordered_map<std::string, std::uint32_t> journal_ids_;
    std::unordered_map<std::string, std::uint32_t> field_ids_;
    std::vector<std::uint32_t> article_fields_;
};

// One article object per line. In non-strict mode malformed lines are skipped
// and counted; duplicate article ids abort in either mode.
Corpus parse_corpus(const std::filesystem::path& path, const ParseOptions& options = {});
Corpus parse_corpus_text(const std::string& text, const ParseOptions& options = {});

// Canonical JSON Lines serialization; parse(serialize(c)) == c field by field.
std::string serialize_corpus(const Corpus& corpus);

struct ValidationReport {
    std::size_t articles_total = 0;
    std::size_t refs_total = 0;
    std::size_t unpairable_articles = 0;       // fewer than 2 reference slots
    std::size_t temporal_violations = 0;       // cited year > citing year
    std::size_t unknown_country_codes = 0;     // occurrences not in geo tables
    std::size_t empty_country_lists = 0;
    std::size_t skipped_lines = 0;

    std::string to_csv() const;  // check,count
};

class GeoTables;
ValidationReport validate(const Corpus& corpus, const GeoTables& geo);

}  // namespace recomb
