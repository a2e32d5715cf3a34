#pragma once

#include "nsmk/field.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace nsmk {

/// Binary snapshot: "NSMK1", u32 N, f64 nu, f64 time, u64 seed, then
/// (re, im) x 3 per stored mode in canonical order. Little-endian.
struct Snapshot {
    SpectralField field;
    double nu = 0.0;
    double time = 0.0;
    std::uint64_t seed = 0;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Reads a snapshot and checks it matches the run truncation.
SpectralField load_initial_snapshot(const std::filesystem::path& path, int n_modes);

SpectralField snapshot_roundtrip(const SpectralField& x, const std::filesystem::path& path);

/// Round-trip exact decimal text for a double.
std::string format_double(double v);

/// CSV file whose first line is "# config_hash=<hash>", followed by optional
/// comment lines and the column header.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
              const std::vector<std::string>& columns, const std::vector<std::string>& comments = {});

    void row(std::span<const double> values);
    /// Row with a leading text cell.
    void row(const std::string& label, std::span<const double> values);
    std::size_t columns() const { return n_columns_; }
    void close();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t n_columns_;
};

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace nsmk
