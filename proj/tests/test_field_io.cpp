#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "winmart/field_io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace winmart;

namespace {

std::filesystem::path tmpdir() {
    auto p = std::filesystem::temp_directory_path() / "winmart_field_io_test";
    std::filesystem::create_directories(p);
    return p;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ScalarField make_field() {
    auto grid = std::make_shared<Grid>(Grid::build(2, SublevelSpec{8.0}, 0.02));
    return initial_field(std::move(grid), InitKind::SuperSolution);
}

}  // namespace

TEST_CASE("round trip is exact") {
    const auto path = tmpdir() / "f.mafg";
    const ScalarField f = make_field();
    write_field(path.string(), f);
    const ScalarField r = read_field(path.string());
    REQUIRE(r.grid().num_nodes() == f.grid().num_nodes());
    CHECK(r.grid().dim() == 2);
    CHECK(r.grid().level() == 8.0);
    CHECK(r.grid().h() == 0.02);
    for (Index i = 0; i < f.grid().num_nodes(); ++i) {
        CHECK(r.values()[i] == f.values()[i]);  // bitwise
        CHECK(r.grid().lat(i) == f.grid().lat(i));
    }
}

TEST_CASE("writing twice produces identical bytes") {
    const auto a = tmpdir() / "a.mafg";
    const auto b = tmpdir() / "b.mafg";
    const ScalarField f = make_field();
    write_field(a.string(), f);
    write_field(b.string(), f);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("corruption is detected") {
    const auto path = tmpdir() / "c.mafg";
    write_field(path.string(), make_field());
    auto bytes = slurp(path);

    SUBCASE("flipped payload byte") {
        bytes[bytes.size() / 2] ^= 0x40;
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   std::streamsize(bytes.size()));
        CHECK_THROWS_AS(read_field(path.string()), FieldIoError);
    }
    SUBCASE("truncated") {
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   std::streamsize(bytes.size() - 12));
        CHECK_THROWS_AS(read_field(path.string()), FieldIoError);
    }
    SUBCASE("wrong magic") {
        bytes[0] = 'X';
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   std::streamsize(bytes.size()));
        CHECK_THROWS_AS(read_field(path.string()), FieldIoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_field((tmpdir() / "nope.mafg").string()), FieldIoError);
    }
}

TEST_CASE("crc32 known vector") {
    // standard test vector: crc32("123456789") = 0xCBF43926
    const char* s = "123456789";
    CHECK(crc32(s, 9) == 0xCBF43926u);
}
