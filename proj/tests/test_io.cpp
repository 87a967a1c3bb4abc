// CSV serialization: exact round-trips, header tolerance, and rejection of
// malformed input.

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "aggdiff/io.hpp"

using namespace aggdiff;

TEST_CASE("density CSV: exact round-trip", "[io]") {
    ModelParams p;
    p.N = 3;
    p.k = -1.5;
    p.m = 1.5;
    p.chi = 1;
    p.M = 0.5;
    const auto rho = random_decreasing(99, p, 48, 1.7);
    std::ostringstream out;
    write_density_csv(out, rho);
    std::istringstream in(out.str());
    const auto back = read_density_csv(in, 3);
    REQUIRE(back.cells() == rho.cells());
    for (int j = 0; j < rho.cells(); ++j) {
        CHECK(back.face(j) == rho.face(j));
        CHECK(back.value(j) == rho.value(j));
    }
    CHECK(back.face(rho.cells()) == rho.face(rho.cells()));
}

TEST_CASE("density CSV: header line is optional", "[io]") {
    const std::string with_header = "r,rho\n0,2\n0.5,1\n1,0\n";
    const std::string without = "0,2\n0.5,1\n1,0\n";
    std::istringstream a(with_header), b(without);
    const auto da = read_density_csv(a, 3);
    const auto db = read_density_csv(b, 3);
    REQUIRE(da.cells() == 2);
    REQUIRE(db.cells() == 2);
    CHECK(da.value(0) == 2.0);
    CHECK(da.value(1) == 1.0);
    CHECK(da.face(2) == db.face(2));
    // blank lines are skipped
    std::istringstream c("r,rho\n0,2\n\n0.5,1\n\n1,0\n");
    CHECK(read_density_csv(c, 3).cells() == 2);
}

TEST_CASE("density CSV: malformed input is rejected", "[io]") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_density_csv(empty, 3), std::runtime_error);
    std::istringstream no_comma("r,rho\n0.5\n");
    CHECK_THROWS_AS(read_density_csv(no_comma, 3), std::runtime_error);
    std::istringstream single("0,1\n");
    CHECK_THROWS_AS(read_density_csv(single, 3), std::runtime_error);
    // non-numeric payload
    std::istringstream junk("0,abc\n1,0\n");
    CHECK_THROWS(read_density_csv(junk, 3));
    // grid not starting at zero propagates the density validation
    std::istringstream shifted("0.5,1\n1,0\n");
    CHECK_THROWS_AS(read_density_csv(shifted, 3), std::invalid_argument);
}

TEST_CASE("format_g17: round-trip precision", "[io]") {
    for (double x : {1.0 / 3.0, 2.718281828459045, 1e-300, 6.02214076e23}) {
        const std::string s = format_g17(x);
        CHECK(std::stod(s) == x);
    }
    CHECK(format_g17(0.0) == "0");
}
