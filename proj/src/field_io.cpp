#include "winmart/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace winmart {

namespace {

constexpr char kMagic[4] = {'M', 'A', 'F', 'G'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "field i/o assumes a little-endian host");

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& buf, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    put_u64(buf, v);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

double get_f64(const std::uint8_t* p) {
    const std::uint64_t v = get_u64(p);
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i)
        c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void write_field(const std::string& path, const ScalarField& field) {
    const Grid& g = field.grid();
    std::vector<std::uint8_t> payload;
    payload.reserve(26 + size_t(g.num_nodes()) * size_t(g.dim() + 1) * 8);
    payload.push_back(kVersion);
    payload.push_back(std::uint8_t(g.dim()));
    put_f64(payload, g.level());
    put_f64(payload, g.h());
    put_u64(payload, std::uint64_t(g.num_nodes()));
    for (Index i = 0; i < g.num_nodes(); ++i) {
        const Eigen::VectorXd x = g.coords(i);
        for (int a = 0; a < g.dim(); ++a) put_f64(payload, x[a]);
    }
    for (Index i = 0; i < g.num_nodes(); ++i) put_f64(payload, field.values()[i]);
    const std::uint32_t crc = crc32(payload.data(), payload.size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FieldIoError("write_field: cannot open " + path);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size()));
    for (int i = 0; i < 4; ++i) {
        const char b = char((crc >> (8 * i)) & 0xFF);
        out.write(&b, 1);
    }
    if (!out) throw FieldIoError("write_field: write failed for " + path);
}

ScalarField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FieldIoError("read_field: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 34 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FieldIoError("read_field: not a MAFG file: " + path);

    const std::uint8_t* p = bytes.data() + 4;
    const std::size_t payload_len = bytes.size() - 8;
    const std::uint32_t want = crc32(p, payload_len);
    std::uint32_t got = 0;
    for (int i = 0; i < 4; ++i)
        got |= std::uint32_t(bytes[bytes.size() - 4 + size_t(i)]) << (8 * i);
    if (want != got) throw FieldIoError("read_field: CRC mismatch in " + path);

    const std::uint8_t version = p[0];
    if (version != kVersion) throw FieldIoError("read_field: unsupported version");
    const int d = p[1];
    const double level = get_f64(p + 2);
    const double h = get_f64(p + 10);
    const std::uint64_t n = get_u64(p + 18);
    const std::size_t need = 26 + n * std::uint64_t(d + 1) * 8;
    if (payload_len != need) throw FieldIoError("read_field: truncated file");

    auto grid = std::make_shared<Grid>(Grid::build(d, SublevelSpec{level}, h));
    if (std::uint64_t(grid->num_nodes()) != n)
        throw FieldIoError("read_field: node count does not match rebuilt grid");

    const std::uint8_t* q = p + 26;
    for (Index i = 0; i < grid->num_nodes(); ++i) {
        const Eigen::VectorXd x = grid->coords(i);
        for (int a = 0; a < d; ++a, q += 8) {
            if (get_f64(q) != x[a])
                throw FieldIoError("read_field: node coordinates do not match rebuilt grid");
        }
    }
    Eigen::VectorXd values(grid->num_nodes());
    for (Index i = 0; i < grid->num_nodes(); ++i, q += 8) values[i] = get_f64(q);
    return ScalarField(std::move(grid), std::move(values));
}

}  // namespace winmart
