#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kinetic {

// SHA-256 of a string, lowercase hex.
std::string sha256_hex(const std::string& text);

// On-disk store of assembled matrices keyed by a content description.  Files
// are <dir>/<sha256(key)>.kmat: magic, format version, the key text itself (so
// collisions are detected), creation time, then the matrices as raw doubles.
class MatrixCache {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    MatrixCache(std::filesystem::path dir, bool enabled = true);

    bool enabled() const { return enabled_; }
    const std::filesystem::path& dir() const { return dir_; }

    std::optional<std::vector<Eigen::MatrixXd>> load(const std::string& key) const;
    void store(const std::string& key, const std::vector<Eigen::MatrixXd>& mats) const;
    std::filesystem::path path_for(const std::string& key) const;

private:
    std::filesystem::path dir_;
    bool enabled_;
};

// Plain-text dump (one row per line, %.17e) for cross-implementation diffing.
void write_matrix_text(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_text(const std::filesystem::path& path);

}  // namespace kinetic
