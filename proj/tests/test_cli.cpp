#include "fracheat/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct outcome {
    int code;
    std::string out;
    std::string err;
};

outcome invoke(std::initializer_list<const char*> args) {
    std::vector<const char*> argv{"fracheat"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = fracheat::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string nth_line(const std::string& text, int n) {
    std::istringstream in(text);
    std::string line;
    for (int i = 0; i <= n; ++i)
        std::getline(in, line);
    return line;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"bogus"}).code == 2);
    CHECK(invoke({"heat-content", "--no-such-flag"}).code == 2);
    CHECK(invoke({"heat-content", "--shape", "disk:r=1", "--t", "0.1"}).code == 2);
    CHECK(invoke({"heat-content", "--t", "0.1", "--t-grid", "1e-3:1e-1:3:log"}).code == 2);
    CHECK(invoke({"verify", "--theorem", "hc-z"}).code == 2);
    CHECK(invoke({"verify"}).code == 2);
    CHECK(invoke({"moments", "--k", "7", "--t", "0.1"}).code == 2);
    CHECK(invoke({"perimeter", "--alpha", "1.5"}).code == 2);
}

TEST_CASE("hypothesis violations exit with 2 and name the hypothesis") {
    const outcome o = invoke({"verify", "--theorem", "main-ii", "--alpha", "1", "--t-max", "0.5", "--n-samples", "100"});
    CHECK(o.code == 2);
    CHECK(o.err.find("0 < t < min{diam(Ω), e^{−1}}") != std::string::npos);
    CHECK(invoke({"verify", "--theorem", "hc-a", "--alpha", "0.5", "--n-samples", "100"}).code == 2);
}

TEST_CASE("first moment is exact") {
    const outcome o = invoke({"moments", "--k", "1", "--alpha", "1.5", "--shape", "ball:d=2,r=1", "--t", "0.01"});
    REQUIRE(o.code == 0);
    CHECK(nth_line(o.out, 0).rfind("# fracheat 1.0.0 subcommand=moments", 0) == 0);
    CHECK(nth_line(o.out, 1) == "alpha,d,shape,t,quantity,method,value,stderr,n_samples,n_steps,seed");
    const std::string row = nth_line(o.out, 2);
    REQUIRE(row.find(",T1,exact,") != std::string::npos);
    const auto value_pos = row.find(",T1,exact,") + 10;
    CHECK(std::stod(row.substr(value_pos)) == 0.01 * std::numbers::pi);
}

TEST_CASE("header records the resolved configuration and the seed resolution order") {
    const outcome dflt = invoke({"heat-content", "--t", "0.01", "--n-samples", "1000"});
    CHECK(dflt.out.find("seed=20240101") != std::string::npos);
    CHECK(dflt.out.find("shape=ball:d=2,r=1") != std::string::npos);
    CHECK(dflt.out.find("alpha=1.5") != std::string::npos);
    CHECK(dflt.out.find("threads") == std::string::npos);

    setenv("FRACHEAT_SEED", "99", 1);
    const outcome env = invoke({"heat-content", "--t", "0.01", "--n-samples", "1000"});
    const outcome flag = invoke({"heat-content", "--t", "0.01", "--n-samples", "1000", "--seed", "5"});
    setenv("FRACHEAT_SEED", "not-a-number", 1);
    const outcome bad = invoke({"heat-content", "--t", "0.01", "--n-samples", "1000"});
    unsetenv("FRACHEAT_SEED");
    CHECK(env.out.find("seed=99") != std::string::npos);
    CHECK(flag.out.find("seed=5") != std::string::npos);
    CHECK(bad.code == 2);
}

TEST_CASE("output is byte-identical across reruns and thread counts") {
    const outcome a = invoke({"psi", "--t-grid", "1e-2:1e-1:2:log", "--n-samples", "20000", "--n-steps", "8",
                              "--quadrature-nodes", "4", "--seed", "3"});
    const outcome b = invoke({"psi", "--t-grid", "1e-2:1e-1:2:log", "--n-samples", "20000", "--n-steps", "8",
                              "--quadrature-nodes", "4", "--seed", "3", "--threads", "3"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const outcome c = invoke({"psi", "--t-grid", "1e-2:1e-1:2:log", "--n-samples", "20000", "--n-steps", "8",
                              "--quadrature-nodes", "4", "--seed", "4"});
    CHECK(a.out != c.out);
}

TEST_CASE("every subcommand runs at small scale") {
    CHECK(invoke({"kernel", "--alpha", "1", "--d", "3", "--r-grid", "0.1:10:3:log"}).code == 0);
    CHECK(invoke({"perimeter", "--alpha", "0.5", "--n-samples", "2000"}).code == 0);
    CHECK(invoke({"shc", "--t", "0.01", "--n-samples", "2000"}).code == 0);
    CHECK(invoke({"moments", "--t", "0.01", "--n-samples", "2000", "--quadrature-nodes", "4"}).code == 0);
    const outcome v = invoke({"verify", "--theorem", "hc-a", "--alpha", "2", "--n-samples", "50000"});
    CHECK(v.code == 0);
    CHECK(v.out.find("theorem_id,fitted_limit,fit_stderr,paper_constant,tolerance,verdict") != std::string::npos);
    CHECK(v.err.find("verdict PASS") != std::string::npos);
    const outcome f = invoke({"audit", "--t-grid", "1e-3:1e-1:3:log", "--n-samples", "20000", "--n-steps", "8",
                              "--quadrature-nodes", "4", "--inject-heat-shift", "5"});
    CHECK(f.code == 1);
    CHECK(invoke({"--version"}).code == 0);
}

}
