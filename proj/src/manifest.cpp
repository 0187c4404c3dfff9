#include "recomb/manifest.hpp"

#include <chrono>
#include <ctime>

#include <json.hpp>

#include "recomb/common.hpp"
#include "recomb/csv.hpp"

namespace recomb {

RunManifest::RunManifest(std::string stage) : stage_(std::move(stage)) {
    entries_["tool_version"] = std::string(kToolVersion);
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    volatile_entries_["timestamp"] = buf;
}

void RunManifest::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}
void RunManifest::set(const std::string& key, std::uint64_t value) {
    entries_[key] = std::to_string(value);
}
void RunManifest::set(const std::string& key, double value) {
    entries_[key] = format_double(value);
}
void RunManifest::set_volatile(const std::string& key, const std::string& value) {
    volatile_entries_[key] = value;
}
void RunManifest::add_input_digest(const std::string& name,
                                   const std::filesystem::path& file) {
    input_digests_[name] = digest_file(file);
}

std::string RunManifest::digest() const {
    std::string canonical = "stage=" + stage_;
    for (const auto& [k, v] : entries_) canonical += "\n" + k + "=" + v;
    for (const auto& [k, v] : input_digests_) canonical += "\ninput:" + k + "=" + v;
    return fnv1a64_hex(canonical);
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["stage"] = stage_;
    for (const auto& [k, v] : entries_) j[k] = v;
    for (const auto& [k, v] : volatile_entries_) j[k] = v;
    if (!input_digests_.empty()) {
        nlohmann::json inputs;
        for (const auto& [k, v] : input_digests_) inputs[k] = v;
        j["input_digests"] = inputs;
    }
    j["manifest_digest"] = digest();
    return j.dump(2) + "\n";
}

void RunManifest::save(const std::filesystem::path& path) const {
    write_file_atomic(path, to_json());
}

std::string RunManifest::artifact_header() const {
    return "# manifest " + digest() + "\n";
}

}  // namespace recomb
