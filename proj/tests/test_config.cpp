#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "mea/config.hpp"

using namespace mea;
using namespace mea::config;

TEST_CASE("presets round-trip through INI text") {
    for (const std::string name : {"rectangle", "three_leg", "four_leg"}) {
        const auto c = preset(name);
        const auto text = serialize(c);
        CHECK(serialize(parse_string(text)) == text);
    }
    CHECK_THROWS_AS(preset("pentagon"), ConfigError);
}

TEST_CASE("preset contents") {
    const auto r = preset("rectangle");
    CHECK(r.case_.domain.kind == geometry::DomainKind::rectangle);
    CHECK(r.case_.domain.length == 13.0);
    CHECK(r.case_.domain.width == 8.0);
    CHECK(r.reference.kind == ReferenceKind::fd);
    CHECK(preset("three_leg").case_.domain.kind == geometry::DomainKind::annulus);
    CHECK(preset("four_leg").case_.domain.kind == geometry::DomainKind::disk);
    CHECK(preset("four_leg").train.n_bc_curv == 1024);
}

TEST_CASE("unknown sections and keys are rejected") {
    const auto base = serialize(preset("rectangle"));
    CHECK_THROWS_AS(parse_string(base + "\n[extras]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(with_value(preset("rectangle"), "train", "widht", "8"), ConfigError);
    CHECK_THROWS_AS(with_value(preset("rectangle"), "train", "width", "-3"), ConfigError);
    CHECK_THROWS_AS(with_value(preset("rectangle"), "train", "formulation", "mixed"), ConfigError);
    CHECK_THROWS_AS(parse_string("[case]\ndomain = hexagon\n"), ConfigError);
}

TEST_CASE("with_value replaces one key") {
    const auto c = with_value(preset("four_leg"), "train", "width", "12");
    CHECK(c.train.width == 12);
    CHECK(c.train.hidden_layers == preset("four_leg").train.hidden_layers);
    const auto d = with_value(c, "case", "radius", "5");
    CHECK(d.case_.domain.r_out == 5.0);
}

TEST_CASE("output root override applies to relative directories only") {
    OutputConfig o;
    o.directory = "out/x";
    ::setenv("MEA_OUTPUT_ROOT", "/tmp/root", 1);
    CHECK(resolve_output_directory(o) == "/tmp/root/out/x");
    o.directory = "/abs/x";
    CHECK(resolve_output_directory(o) == "/abs/x");
    ::unsetenv("MEA_OUTPUT_ROOT");
    o.directory = "out/x";
    CHECK(resolve_output_directory(o) == "out/x");
}

TEST_CASE("build_case wires references") {
    const auto fd = build_case(with_value(preset("rectangle"), "reference", "fd_nx", "33"));
    REQUIRE(fd.fd);
    CHECK(fd.fd->nx == 33);
    CHECK(!fd.manufactured);
    const auto m = build_case(preset("four_leg"));
    REQUIRE(m.manufactured);
    CHECK(m.problem.oracle);
    CHECK(!m.problem.oracle_points.empty());
    auto bad = preset("four_leg");
    bad.reference.kind = ReferenceKind::fd;
    CHECK_THROWS_AS(build_case(bad), ConfigError);
}
