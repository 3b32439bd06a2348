#include <cmath>
#include <limits>
#include <sstream>

#include "cascade/io.hpp"
#include "cascade/model.hpp"
#include "doctest.h"

using namespace cascade;

TEST_CASE("doubles round-trip") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 1.7976931348623157e308}) {
        const auto s = format_double(v);
        CHECK(parse_double(s) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
    CHECK_THROWS_AS(parse_double(""), ValidationError);
}

TEST_CASE("fnv1a test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("csv writer") {
    std::ostringstream os;
    const Provenance prov{"0.1.0", 0xabcULL, 42};
    CHECK(prov.line() == "# cascade 0.1.0 config=0000000000000abc seed=42");
    {
        CsvWriter w(os, prov, {"t", "z_s"});
        w.comment("T=2");
        w.cell(0.5).cell(1);
        w.end_row();
        CHECK_THROWS_AS(w.comment("late"), std::logic_error);
        w.cell(1.0);
        CHECK_THROWS_AS(w.end_row(), std::logic_error);
    }
    CHECK(os.str().rfind("# cascade 0.1.0 config=0000000000000abc seed=42\n# T=2\nt,z_s\n0.5,1\n", 0) == 0);

    std::ostringstream empty;
    CsvWriter e(empty, prov, {"idx", "t"});
    e.finish();
    CHECK(empty.str() == prov.line() + "\nidx,t\n");
}

TEST_CASE("tau sample files") {
    const TauSample s{{0.125, 0.5, 1.75}, 2.0};
    std::stringstream io;
    write_tau_sample(io, s, Provenance{"0.1.0", 1, 2});
    const auto back = read_tau_sample(io);
    CHECK(back.T == 2.0);
    CHECK(back.times == s.times);

        std::istringstream no_t("idx,t\n0,0.5\n");
    CHECK_THROWS_AS(read_tau_sample(no_t), ValidationError);
    std::istringstream outside("# T=1\nt\n1.5\n");
    CHECK_THROWS_AS(read_tau_sample(outside), ValidationError);
    std::istringstream indexed("# T=2\nidx,t\n0,0.5\n1,1.5\n");
    CHECK(read_tau_sample(indexed).times == std::vector<double>{0.5, 1.5});
    std::istringstream no_col("# T=2\nidx,time\n0,0.5\n");
    CHECK_THROWS_AS(read_tau_sample(no_col), ValidationError);
    std::istringstream ok("# cascade x\n# T=1\nt\n0.5\n0.25\n");
    CHECK(read_tau_sample(ok).times == std::vector<double>{0.25, 0.5});
    CHECK_THROWS_AS(read_tau_sample_file("/nonexistent/taus.csv"), ValidationError);
}
