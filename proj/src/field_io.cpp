#include "chda/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chda/errors.hpp"

namespace chda {
namespace {

constexpr char kFieldMagic[4] = {'C', 'H', 'D', 'A'};
constexpr char kEnsembleMagic[4] = {'C', 'H', 'E', 'N'};

void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
}

bool get_bytes(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint16_t get_u16(std::istream& in, const char* what) {
    char b[2];
    if (!get_bytes(in, b, 2)) throw TruncatedError(std::string("truncated ") + what);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    char b[4];
    if (!get_bytes(in, b, 4)) throw TruncatedError(std::string("truncated ") + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

double get_f64(std::istream& in, const char* what) {
    char b[8];
    if (!get_bytes(in, b, 8)) throw TruncatedError(std::string("truncated ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return std::bit_cast<double>(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    return in;
}

}  // namespace

void write_field(const LogPermField& f, std::ostream& out) {
    out.write(kFieldMagic, 4);
    put_u16(out, kFieldFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(f.grid.nx));
    put_u32(out, static_cast<std::uint32_t>(f.grid.ny));
    put_f64(out, f.grid.dx);
    put_f64(out, f.grid.dy);
    put_f64(out, f.grid.thickness);
    for (double v : f.values) put_f64(out, v);
}

LogPermField read_field(std::istream& in) {
    char magic[4];
    if (!get_bytes(in, magic, 4)) throw TruncatedError("truncated field header");
    if (std::memcmp(magic, kFieldMagic, 4) != 0) throw FormatError("format error: bad field magic");
    const std::uint16_t version = get_u16(in, "field header");
    if (version != kFieldFormatVersion)
        throw FormatError("format error: unsupported field version " + std::to_string(version));

    GridSpec g;
    g.nx = static_cast<int>(get_u32(in, "field header"));
    g.ny = static_cast<int>(get_u32(in, "field header"));
    g.dx = get_f64(in, "field header");
    g.dy = get_f64(in, "field header");
    g.thickness = get_f64(in, "field header");
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw DimensionError(std::string("dimension mismatch: ") + e.what());
    }

    LogPermField f(g);
    for (std::size_t c = 0; c < g.cell_count(); ++c) f.values[c] = get_f64(in, "payload");
    return f;
}

void save_field(const LogPermField& f, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_field(f, out);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

LogPermField load_field(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_field(in);
}

void save_ensemble(const Ensemble& e, const std::filesystem::path& path) {
    e.validate();
    auto out = open_out(path);
    out.write(kEnsembleMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(e.size()));
    for (const auto& m : e.members) write_field(m, out);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Ensemble load_ensemble(const std::filesystem::path& path) {
    auto in = open_in(path);
    char magic[4];
    if (!get_bytes(in, magic, 4)) throw TruncatedError("truncated ensemble header");
    if (std::memcmp(magic, kEnsembleMagic, 4) != 0)
        throw FormatError("format error: bad ensemble magic");
    const std::uint32_t count = get_u32(in, "ensemble header");

    Ensemble e;
    e.members.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) e.members.push_back(read_field(in));
    e.validate();
    return e;
}

void export_field_csv(const LogPermField& f, const std::filesystem::path& path) {
    auto out = open_out(path);
    std::ostringstream ss;
    ss << "i,j,log10_k_mD\n";
    ss.precision(17);
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) ss << i << ',' << j << ',' << f.at(i, j) << '\n';
    out << ss.str();
}

}  // namespace chda
