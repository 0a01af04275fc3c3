#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mgk/random.hpp"
#include "mgk/trace.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(MGK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / "mgk_cli_test";
    fs::create_directories(d);
    return d / name;
}

}  // namespace

TEST(Cli, VerifyIsDeterministic) {
    auto a = scratch("l21a.json"), b = scratch("l21b.json");
    ASSERT_EQ(run("verify lemma-2-1 --n 2 --m 3 --seed 7 --out " + a.string()), 0);
    ASSERT_EQ(run("verify lemma-2-1 --n 2 --m 3 --seed 7 --out " + b.string()), 0);
    auto x = slurp(a);
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(b));
    EXPECT_TRUE(nlohmann::json::parse(x)["passed"].get<bool>());
    EXPECT_FALSE(fs::exists(a.string() + ".tmp"));
}

TEST(Cli, VerifyD2) { EXPECT_EQ(run("gc verify-d2 --n 2 --m 3"), 0); }

TEST(Cli, EnumerateTheta) {
    auto p = scratch("g23.jsonl");
    ASSERT_EQ(run("graphs enumerate --n 2 --m 3 --trivalent --out " + p.string()), 0);
    std::istringstream in(slurp(p));
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j["n"], 2);
        EXPECT_EQ(j["edges"].size(), 3u);
        ++lines;
    }
    EXPECT_EQ(lines, 8);
    auto d = scratch("d23.jsonl");
    ASSERT_EQ(run("gc d --in " + p.string() + " --out " + d.string()), 0);
    std::istringstream out(slurp(d));
    while (std::getline(out, line)) EXPECT_EQ(line, "[]");
}

TEST(Cli, PropagatorFromFile) {
    auto c = scratch("elem.json");
    std::ofstream(c) << R"({"max_degree": 1, "basis": [["q"], ["p"]], "boundary": [[["1"]]]})";
    auto g = scratch("elem_g.json");
    ASSERT_EQ(run("prop solve --complex " + c.string() + " --out " + g.string()), 0);
    EXPECT_EQ(run("prop check --complex " + c.string() + " --g " + g.string()), 0);
    auto nc = scratch("nonacyclic.json");
    std::ofstream(nc) << R"({"max_degree": 1, "basis": [["q"], ["p"]], "boundary": [[["0"]]]})";
    EXPECT_EQ(run("prop solve --complex " + nc.string()), 1);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("flow count-theta --config /nonexistent/sys.toml"), 2);
    EXPECT_EQ(run("invariant z --config /nonexistent/sys.toml"), 2);
    EXPECT_EQ(run("nosuchcommand"), 2);
    EXPECT_EQ(run("gc quotient --space a99"), 2);
    auto bad = scratch("bad.toml");
    std::ofstream(bad) << "[solver]\nbogus = 1\n[[functions]]\nexpr = \"X4\"\n";
    EXPECT_EQ(run("flow critical --config " + bad.string()), 2);
}

TEST(Cli, InvalidCountsExitOne) {
    using namespace mgk;
    auto c = direct_sum_with_elementary(elementary_complex(0, "p", "q", 2), 1, "x", "y");
    auto k = build_count_constraints(2, 3, Complexes(3, c));
    ASSERT_FALSE(k.rows.empty());
    const auto& g = k.variables[k.rows.front().begin()->first];
    auto counts = scratch("counts.json");
    std::ofstream(counts) << nlohmann::json{{"counts", {{{"graph", to_json(g)}, {"count", 1}}}}}.dump();
    auto cf = scratch("complex.json");
    std::ofstream(cf) << to_json(c).dump();
    auto r = scratch("assembled.json");
    ASSERT_EQ(run("invariant assemble --counts " + counts.string() + " --complexes " + cf.string() + " --out " +
                  r.string()),
              1);
    auto j = nlohmann::json::parse(slurp(r));
    EXPECT_FALSE(j["violated"].empty());
}
