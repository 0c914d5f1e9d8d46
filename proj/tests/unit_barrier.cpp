#include "doctest.h"

#include "ocs/barrier.hpp"
#include "ocs/errors.hpp"

#include <cstdio>
#include <fstream>
#include <string>

using namespace ocs;

TEST_CASE("parse rectangular barrier") {
    BarrierSpec spec = parse_barrier("rect:0.2,200,215");
    REQUIRE(spec.is_rectangular());
    CHECK(spec.left_edge() == doctest::Approx(200.0));
    CHECK(spec.right_edge() == doctest::Approx(215.0));
    CHECK(spec.top() == doctest::Approx(0.2));
    CHECK(spec.midpoint() == doctest::Approx(207.5));
    CHECK(spec.potential(207.0) == doctest::Approx(0.2));
    CHECK(spec.potential(199.0) == 0.0);
    CHECK(spec.potential(216.0) == 0.0);

    // edges belong to the barrier
    CHECK(spec.potential(200.0) == doctest::Approx(0.2));
    CHECK(spec.potential(215.0) == doctest::Approx(0.2));
}

TEST_CASE("parse double barrier") {
    BarrierSpec spec = parse_barrier("double:40,0.5,1,0");
    REQUIRE(spec.is_double());
    CHECK(spec.left_edge() == doctest::Approx(0.0));
    CHECK(spec.right_edge() == doctest::Approx(2.0)); // 2d + l
    CHECK(spec.top() == doctest::Approx(40.0));
    CHECK(spec.potential(0.25) == doctest::Approx(40.0));
    CHECK(spec.potential(1.0) == 0.0);   // gap midpoint
    CHECK(spec.potential(1.75) == doctest::Approx(40.0));
}

TEST_CASE("parse errors name the offending field") {
    CHECK_THROWS_AS(parse_barrier("rect:0.2,200"), ValidationError);
    CHECK_THROWS_AS(parse_barrier("triangle:1,2,3"), ValidationError);
    CHECK_THROWS_AS(parse_barrier("rect:abc,200,215"), ValidationError);
    CHECK_THROWS_AS(parse_barrier(""), ValidationError);

    try {
        parse_barrier("rect:0.2,215,200");
        validate_barrier(parse_barrier("rect:0.2,215,200"));
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        // either the parser or the validator must reject reversed edges
        CHECK(std::string(e.what()).size() > 0);
    }
}

TEST_CASE("validate_barrier accepts sane rectangles and reports geometry") {
    BarrierValidation v = validate_barrier(parse_barrier("rect:0.2,200,215"));
    CHECK(v.valid);
    CHECK(v.midpoint == doctest::Approx(207.5));
    CHECK(v.width == doctest::Approx(15.0));
    CHECK(v.symmetry_residual <= 1e-12);
}

TEST_CASE("validate_barrier rejects degenerate geometry") {
    CHECK_THROWS_AS(validate_barrier(parse_barrier("rect:0.2,200,200")), DegenerateGeometry);
    CHECK_THROWS_AS(validate_barrier(parse_barrier("double:40,0,1,0")), DegenerateGeometry);
    CHECK_THROWS_AS(validate_barrier(parse_barrier("double:40,0.5,-1,0")), DegenerateGeometry);
    // a zero gap is legal: the two blocks merge into one contiguous barrier
    CHECK_NOTHROW(validate_barrier(parse_barrier("double:40,0.5,0,0")));
}

static std::string write_table(const std::string& name, const std::string& body) {
    std::string path = std::string("/tmp/") + name;
    std::ofstream out(path);
    out << body;
    return path;
}

TEST_CASE("tabulated barrier loads and symmetrizes") {
    std::string path = write_table("ocs_tab_ok.csv",
        "x_nm,V_eV\n"
        "0,0.0\n"
        "1,0.1\n"
        "2,0.2\n"
        "3,0.1\n"
        "4,0.0\n");
    BarrierSpec spec = load_tabulated_csv(path);
    BarrierValidation v = validate_barrier(spec);
    CHECK(v.valid);
    CHECK(v.midpoint == doctest::Approx(2.0));
    CHECK(spec.top() == doctest::Approx(0.2));
    CHECK(spec.potential(-1.0) == 0.0);
    CHECK(spec.potential(5.0) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("asymmetric table is rejected") {
    std::string path = write_table("ocs_tab_bad.csv",
        "0,0.0\n"
        "1,0.1\n"
        "2,0.2\n"
        "3,0.3\n"
        "4,0.0\n");
    BarrierSpec spec = load_tabulated_csv(path);
    CHECK_THROWS_AS(validate_barrier(spec), AsymmetricBarrier);
    std::remove(path.c_str());
}

TEST_CASE("missing table file is a validation error") {
    CHECK_THROWS_AS(load_tabulated_csv("/tmp/ocs_no_such_table.csv"), ValidationError);
}

TEST_CASE("describe names the shape") {
    CHECK(parse_barrier("rect:0.2,200,215").describe().find("rect") != std::string::npos);
    CHECK(parse_barrier("double:40,0.5,1,0").describe().find("double") != std::string::npos);
}
