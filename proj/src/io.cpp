#include "nsmk/io.hpp"

#include "nsmk/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <iomanip>
#include <memory>
#include <sstream>

namespace nsmk {

namespace {

constexpr char kMagic[5] = {'N', 'S', 'M', 'K', '1'};

template <class T>
void put_le(std::string& buf, T value) {
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    buf.append(b.data(), b.size());
}

template <class T>
T get_le(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
    if (pos + sizeof(T) > buf.size()) throw FormatError(path.string() + ": truncated snapshot");
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), buf.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
    if (snap.field.empty()) throw ConfigError("write_snapshot: empty field");
    std::string buf(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(snap.field.n_modes()));
    put_le<double>(buf, snap.nu);
    put_le<double>(buf, snap.time);
    put_le<std::uint64_t>(buf, snap.seed);
    for (const auto& c : snap.field.coeffs()) {
        for (const auto& z : c) {
            put_le<double>(buf, z.real());
            put_le<double>(buf, z.imag());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ConfigError("write failed: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    const std::string buf = read_all(path);
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path.string() + ": bad magic (expected NSMK1)");
    }
    std::size_t pos = sizeof(kMagic);
    const auto n = get_le<std::uint32_t>(buf, pos, path);
    if (n < 1 || n > 512) throw FormatError(path.string() + ": implausible N=" + std::to_string(n));
    Snapshot s;
    s.nu = get_le<double>(buf, pos, path);
    s.time = get_le<double>(buf, pos, path);
    s.seed = get_le<std::uint64_t>(buf, pos, path);
    s.field = SpectralField(static_cast<int>(n));
    const std::size_t expect = pos + s.field.size() * 6 * sizeof(double);
    if (buf.size() != expect) {
        throw FormatError(path.string() + ": payload size " + std::to_string(buf.size() - pos) +
                          " does not match N=" + std::to_string(n));
    }
    for (auto& c : s.field.coeffs()) {
        for (auto& z : c) {
            const double re = get_le<double>(buf, pos, path);
            const double im = get_le<double>(buf, pos, path);
            z = Complex(re, im);
        }
    }
    return s;
}

SpectralField load_initial_snapshot(const std::filesystem::path& path, int n_modes) {
    Snapshot s = read_snapshot(path);
    if (s.field.n_modes() != n_modes) {
        throw FormatError(path.string() + ": truncation mismatch, snapshot has N=" +
                          std::to_string(s.field.n_modes()) + " but the run uses N=" + std::to_string(n_modes));
    }
    return std::move(s.field);
}

SpectralField snapshot_roundtrip(const SpectralField& x, const std::filesystem::path& path) {
    write_snapshot(path, {.field = x});
    return read_snapshot(path).field;
}

std::string format_double(double v) {
    std::array<char, 32> b;
    const auto r = std::to_chars(b.data(), b.data() + b.size(), v);
    return std::string(b.data(), r.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
                     const std::vector<std::string>& columns, const std::vector<std::string>& comments)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), n_columns_(columns.size()) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << "# config_hash=" << config_hash << '\n';
    for (const auto& c : comments) out_ << "# " << c << '\n';
    for (std::size_t j = 0; j < columns.size(); ++j) out_ << (j ? "," : "") << columns[j];
    out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != n_columns_) throw std::logic_error("csv row width mismatch in " + path_.string());
    for (std::size_t j = 0; j < values.size(); ++j) out_ << (j ? "," : "") << format_double(values[j]);
    out_ << '\n';
}

void CsvWriter::row(const std::string& label, std::span<const double> values) {
    if (values.size() + 1 != n_columns_) throw std::logic_error("csv row width mismatch in " + path_.string());
    out_ << label;
    for (double v : values) out_ << ',' << format_double(v);
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw ConfigError("write failed: " + path_.string());
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_all(path)); }

}  // namespace nsmk
