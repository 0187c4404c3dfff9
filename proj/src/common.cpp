#include "recomb/common.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>

namespace recomb {

namespace {

// Joins threads and rethrows the first exception any worker raised.
template <class MakeWork>
void run_workers(int workers, MakeWork&& make_work) {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                make_work(w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_blocks(std::size_t n, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    const auto nworkers = static_cast<std::size_t>(workers);
    const std::size_t chunk = (n + nworkers - 1) / nworkers;
    run_workers(workers, [&](int w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) fn(begin, end);
    });
}

void parallel_tasks(std::size_t n_tasks, int workers,
                    const std::function<void(std::size_t)>& fn) {
    if (n_tasks == 0) return;
    if (workers <= 1 || n_tasks == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
        return;
    }
    run_workers(workers, [&](int w) {
        for (std::size_t t = static_cast<std::size_t>(w); t < n_tasks;
             t += static_cast<std::size_t>(workers)) {
            fn(t);
        }
    });
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    const std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h >> (4 * i)) & 0xf];
    return out;
}

std::string digest_file(const std::filesystem::path& path) {
    return fnv1a64_hex(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    static std::atomic<std::uint64_t> counter{0};
    const auto parent = path.has_parent_path() ? path.parent_path()
                                               : std::filesystem::path(".");
    std::filesystem::create_directories(parent);
    const auto tmp = parent / (path.filename().string() + ".tmp" +
                               std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace recomb
