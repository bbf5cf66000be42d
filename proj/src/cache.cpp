#include "kinetic/cache.hpp"

#include <openssl/sha.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "kinetic/errors.hpp"

namespace kinetic {

namespace {

constexpr char kMagic[8] = {'K', 'I', 'N', 'M', 'A', 'T', 'X', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& is, T& v) {
    return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::string sha256_hex(const std::string& text) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
    std::ostringstream os;
    for (unsigned char c : digest) os << std::hex << std::setw(2) << std::setfill('0') << int(c);
    return os.str();
}

MatrixCache::MatrixCache(std::filesystem::path dir, bool enabled)
    : dir_(std::move(dir)), enabled_(enabled) {}

std::filesystem::path MatrixCache::path_for(const std::string& key) const {
    return dir_ / (sha256_hex(key) + ".kmat");
}

std::optional<std::vector<Eigen::MatrixXd>> MatrixCache::load(const std::string& key) const {
    if (!enabled_) return std::nullopt;
    std::ifstream is(path_for(key), std::ios::binary);
    if (!is) return std::nullopt;
    char magic[8];
    if (!is.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) return std::nullopt;
    std::uint32_t version = 0;
    if (!get(is, version) || version != kFormatVersion) return std::nullopt;
    std::uint64_t key_len = 0;
    if (!get(is, key_len)) return std::nullopt;
    std::string stored(key_len, '\0');
    if (!is.read(stored.data(), static_cast<std::streamsize>(key_len)) || stored != key)
        return std::nullopt;
    std::int64_t created = 0;
    std::uint32_t count = 0;
    if (!get(is, created) || !get(is, count)) return std::nullopt;
    std::vector<Eigen::MatrixXd> out;
    for (std::uint32_t k = 0; k < count; ++k) {
        std::uint64_t r = 0, c = 0;
        if (!get(is, r) || !get(is, c)) return std::nullopt;
        Eigen::MatrixXd m(r, c);
        if (!is.read(reinterpret_cast<char*>(m.data()),
                     static_cast<std::streamsize>(r * c * sizeof(double))))
            return std::nullopt;
        out.push_back(std::move(m));
    }
    return out;
}

void MatrixCache::store(const std::string& key, const std::vector<Eigen::MatrixXd>& mats) const {
    if (!enabled_) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    auto final_path = path_for(key);
    auto tmp = final_path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cache: cannot write " + tmp.string());
        os.write(kMagic, 8);
        put(os, kFormatVersion);
        put(os, static_cast<std::uint64_t>(key.size()));
        os.write(key.data(), static_cast<std::streamsize>(key.size()));
        auto now = std::chrono::system_clock::now().time_since_epoch();
        put(os, static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(now).count()));
        put(os, static_cast<std::uint32_t>(mats.size()));
        for (const auto& m : mats) {
            put(os, static_cast<std::uint64_t>(m.rows()));
            put(os, static_cast<std::uint64_t>(m.cols()));
            os.write(reinterpret_cast<const char*>(m.data()),
                     static_cast<std::streamsize>(m.size() * sizeof(double)));
        }
    }
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) throw Error("cache: cannot finalize " + final_path.string());
}

void write_matrix_text(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot write " + path.string());
    std::fprintf(f, "%ld %ld\n", static_cast<long>(m.rows()), static_cast<long>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            std::fprintf(f, j ? " %.17e" : "%.17e", m(i, j));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

Eigen::MatrixXd read_matrix_text(const std::filesystem::path& path) {
    std::ifstream is(path);
    long r = 0, c = 0;
    if (!(is >> r >> c)) throw Error("cannot read " + path.string());
    Eigen::MatrixXd m(r, c);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j)
            if (!(is >> m(i, j))) throw Error("truncated matrix dump " + path.string());
    return m;
}

}  // namespace kinetic
