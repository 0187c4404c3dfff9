#pragma once

// Run manifests: every pipeline stage writes one, and every artifact embeds
// the digest of the manifest that produced it. The digest covers everything
// except volatile fields (timestamp, worker count), so re-runs and different
// parallelism produce byte-identical artifacts.

#include <filesystem>
#include <map>
#include <string>

namespace recomb {

class RunManifest {
public:
    explicit RunManifest(std::string stage);

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, std::uint64_t value);
    void set(const std::string& key, double value);
    void set_volatile(const std::string& key, const std::string& value);
    void add_input_digest(const std::string& name, const std::filesystem::path& file);

    // Digest over the sorted non-volatile entries.
    std::string digest() const;
    std::string to_json() const;
    void save(const std::filesystem::path& path) const;

    // "# manifest <digest>\n" line prepended to artifacts.
    std::string artifact_header() const;

private:
    std::string stage_;
    std::map<std::string, std::string> entries_;
    std::map<std::string, std::string> volatile_entries_;
    std::map<std::string, std::string> input_digests_;
};

}  // namespace recomb
