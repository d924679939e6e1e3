#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace
{
    struct Result
    {
        int code = -1;
        std::string out;
    };

    /// Runs the CLI through the shell; stderr is discarded unless the command redirects it.
    auto lsm(const std::string & args) -> Result
    {
        std::string cmd = std::string(LSM_CLI_PATH) + " " + args;
        if (cmd.find("2>") == std::string::npos)
            cmd += " 2>/dev/null";
        Result r;
        auto * pipe = popen(cmd.c_str(), "r");
        if (! pipe)
            return r;
        char buf[4096];
        std::size_t n;
        while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
            r.out.append(buf, n);
        auto status = pclose(pipe);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    }

    auto count_lines(const std::string & text, const std::string & prefix) -> int
    {
        std::istringstream in(text);
        int n = 0;
        for (std::string line; std::getline(in, line);)
            n += line.rfind(prefix, 0) == 0;
        return n;
    }

    auto slurp(const fs::path & p) -> std::string
    {
        std::ifstream in(p);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    class Cli : public ::testing::Test
    {
    protected:
        void SetUp() override
        {
            dir = fs::temp_directory_path() / ("lsm-cli-" + std::to_string(std::random_device{}()));
            fs::create_directories(dir);
        }

        void TearDown() override { fs::remove_all(dir); }

        auto path(const std::string & name) const -> std::string { return (dir / name).string(); }

        auto write(const std::string & name, const std::string & text) const -> std::string
        {
            std::ofstream(dir / name) << text;
            return path(name);
        }

        fs::path dir;
    };
}

TEST_F(Cli, Version)
{
    auto r = lsm("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "lsm 1.0.0 (lsm-format 1)\n");
}

TEST_F(Cli, GenerateAndEnumerateThroughPipe)
{
    auto r = lsm("gen circling | " + std::string(LSM_CLI_PATH) + " enumerate -g -");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(count_lines(r.out, "matching "), 2);
    EXPECT_NE(r.out.find("enumerate count=2"), std::string::npos);
    EXPECT_NE(r.out.find("edges={1,B},{2,C},{3,D},{4,A}"), std::string::npos);
}

TEST_F(Cli, GenWritesFileAndReportsCounts)
{
    auto r = lsm("gen exponential -n 1 -o " + path("e.game"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("gen gadget=exponential"), std::string::npos);
    EXPECT_NE(r.out.find("vertices=46"), std::string::npos);
    EXPECT_EQ(slurp(path("e.game")).rfind("# lsm-format 1\n", 0), 0u);
}

TEST_F(Cli, ReachFromEmptyOnCircling)
{
    lsm("gen circling -o " + path("c.game"));
    auto r = lsm("reach -g " + path("c.game") + " --init empty");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("reach result=unreachable explored=", 0), 0u);
}

TEST_F(Cli, NodeLimitGivesExitThree)
{
    lsm("gen circling -o " + path("c.game"));
    auto r = lsm("reach -g " + path("c.game") + " --node-limit 5");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("result=undetermined"), std::string::npos);
    EXPECT_NE(r.out.find("node_limit=5"), std::string::npos);
}

TEST_F(Cli, ReachWithWitnessAndReplay)
{
    lsm("gen exponential -n 1 -o " + path("e.game"));
    auto r = lsm("reach -g " + path("e.game") + " --witness " + path("w.trace"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("result=reachable"), std::string::npos);
    EXPECT_NE(r.out.find("shortest_length=51"), std::string::npos);
    auto d = lsm("dynamics -g " + path("e.game") + " --replay " + path("w.trace"));
    EXPECT_EQ(d.code, 0);
    EXPECT_NE(d.out.find("mode=replay"), std::string::npos);
    EXPECT_NE(d.out.find("converged=true steps=51"), std::string::npos);
}

TEST_F(Cli, ReachReducedAndPlainAgree)
{
    lsm("gen random --seed 4 --u 3 --w 3 -o " + path("r.game"));
    auto a = lsm("reach -g " + path("r.game"));
    auto b = lsm("reach -g " + path("r.game") + " --no-reduce");
    auto strip = [](const std::string & s) { return s.substr(0, s.find(" explored=")) + s.substr(s.find(' ', s.find(" explored=") + 1)); };
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(strip(a.out), strip(b.out));
}

TEST_F(Cli, RandomMemoryIsAUsageError)
{
    lsm("gen circling -o " + path("c.game"));
    EXPECT_EQ(lsm("reach -g " + path("c.game") + " -m random").code, 2);
}

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(lsm("").code, 2);
    EXPECT_EQ(lsm("frobnicate").code, 2);
    EXPECT_EQ(lsm("reach").code, 2);
    EXPECT_EQ(lsm("gen nonsense").code, 2);
    EXPECT_EQ(lsm("dynamics -g x -m sometimes").code, 2);
    EXPECT_EQ(lsm("gen threesat").code, 2);
}

TEST_F(Cli, BadInputFails)
{
    auto bad = write("bad.game", "vertex x\nnot a line\n");
    auto r = lsm("enumerate -g " + bad + " 2>&1");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("line 2"), std::string::npos);
    EXPECT_EQ(lsm("enumerate -g " + path("missing.game")).code, 1);
}

TEST_F(Cli, DynamicsIsReproducible)
{
    lsm("gen circling -o " + path("c.game"));
    auto cmd = "dynamics -g " + path("c.game") + " -m random --seed 17 --max-steps 5000";
    auto a = lsm(cmd), b = lsm(cmd);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("seed=17"), std::string::npos);
}

TEST_F(Cli, TraceThenReplay)
{
    lsm("gen circling -o " + path("c.game"));
    auto run = lsm("dynamics -g " + path("c.game") + " -m recency --seed 3 --max-steps 200 --trace " + path("t.trace"));
    auto replayed = lsm("dynamics -g " + path("c.game") + " -m recency --replay " + path("t.trace"));
    EXPECT_EQ(run.code, 0);
    EXPECT_EQ(replayed.code, 0);
    auto matching = [](const std::string & s) { return s.substr(s.find("matching=")); };
    EXPECT_EQ(matching(run.out), matching(replayed.out));
    EXPECT_EQ(slurp(path("t.trace")).find("trace circling seed 3\n"), std::string("# lsm-format 1\n").size());
}

TEST_F(Cli, TwoPhase)
{
    lsm("gen random --seed 8 --u 3 --w 3 -o " + path("r.game"));
    // random games may link U-vertices; only the exit status class is stable here
    auto r = lsm("dynamics -g " + path("r.game") + " -m recency --scope U --two-phase");
    EXPECT_TRUE(r.code == 0 || r.code == 1);
    EXPECT_EQ(lsm("dynamics -g " + path("r.game") + " --two-phase").code, 2);
}

TEST_F(Cli, LpCheckOnExample)
{
    lsm("gen polytope-example -o " + path("p.game"));
    auto point = write("p.point",
        "x_e:1:A 1/4\nx_e:1:B 1/4\nx_e:1:C 0\nx_e:1:D 1/2\nx_e:2:A 0\nx_e:2:B 1/2\nx_e:2:C 0\nx_e:2:D 1/2\n"
        "x_v:1 0\nx_v:2 0\nx_v:A 3/4\nx_v:B 1/4\nx_v:C 1\nx_v:D 0\n");
    auto r = lsm("lp -g " + path("p.game") + " --check " + point);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "lp result=feasible\n");
    auto bad = write("q.point",
        "x_e:1:A 0\nx_e:1:B 0\nx_e:1:C 0\nx_e:1:D 0\nx_e:2:A 0\nx_e:2:B 0\nx_e:2:C 0\nx_e:2:D 0\n"
        "x_v:1 1\nx_v:2 1\nx_v:A 1\nx_v:B 1\nx_v:C 1\nx_v:D 1\n");
    auto s = lsm("lp -g " + path("p.game") + " --check " + bad);
    EXPECT_EQ(s.code, 0);
    EXPECT_EQ(s.out.rfind("lp result=feasible", 0), 0u) << "the empty matching is locally stable here";
}

TEST_F(Cli, LpWritesFile)
{
    lsm("gen circling -o " + path("c.game"));
    auto r = lsm("lp -g " + path("c.game") + " -o " + path("c.lp"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("variables=28"), std::string::npos);
    auto text = slurp(path("c.lp"));
    EXPECT_NE(text.find("Subject To\n"), std::string::npos);
    EXPECT_EQ(text.substr(text.size() - 4), "End\n");
}

TEST_F(Cli, MaxMatch)
{
    lsm("gen circling -o " + path("c.game"));
    auto exact = lsm("maxmatch -g " + path("c.game"));
    EXPECT_NE(exact.out.find("method=exhaustive size=4"), std::string::npos);
    auto approx = lsm("maxmatch -g " + path("c.game") + " --approx");
    EXPECT_NE(approx.out.find("globally_stable=true"), std::string::npos);
    lsm("gen roommates-cycle -o " + path("r.game"));
    EXPECT_EQ(lsm("maxmatch -g " + path("r.game")).out, "maxmatch method=exhaustive result=no-lsm\n");
}

TEST_F(Cli, ReduceThm1ThenReachTarget)
{
    auto cnf = write("f.cnf", "p cnf 1 1\n1 1 1 0\n");
    auto r = lsm("reduce thm1 " + cnf + " -o " + path("t.game"));
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(fs::exists(path("t.game.init")));
    EXPECT_TRUE(fs::exists(path("t.game.target")));
    auto reach = lsm("reach -g " + path("t.game") + " --init " + path("t.game.init") + " --target " + path("t.game.target"));
    EXPECT_EQ(reach.code, 0);
    EXPECT_NE(reach.out.find("result=reachable"), std::string::npos);
    EXPECT_NE(reach.out.find("shortest_length=9"), std::string::npos);

    auto unsat = write("u.cnf", "p cnf 1 2\n1 1 1 0\n-1 -1 -1 0\n");
    lsm("reduce thm1 " + unsat + " -o " + path("u.game"));
    auto no = lsm("reach -g " + path("u.game") + " --init " + path("u.game.init") + " --target " + path("u.game.target"));
    EXPECT_NE(no.out.find("result=unreachable"), std::string::npos);
}

TEST_F(Cli, ReduceThm9AndReverse)
{
    auto graph = write("k3.graph", "vertex a\nvertex b\nvertex c\nedge a b\nedge b c\nedge a c\n");
    lsm("reduce thm9 " + graph + " -o " + path("k3.game"));
    auto mm = lsm("maxmatch -g " + path("k3.game"));
    EXPECT_NE(mm.out.find("size=4"), std::string::npos);
    lsm("gen circling -o " + path("c.game"));
    auto rev = lsm("reduce rev-is " + path("c.game") + " -o " + path("c.graph"));
    EXPECT_NE(rev.out.find("vertices=28"), std::string::npos);
    EXPECT_NE(slurp(path("c.graph")).find("e:1:A"), std::string::npos);
}

TEST_F(Cli, ReduceToStdout)
{
    auto cnf = write("f.cnf", "p cnf 1 1\n1 1 1 0\n");
    auto r = lsm("reduce thm3 " + cnf);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("# lsm-format 1\n", 0), 0u);
    EXPECT_EQ(count_lines(r.out, "vertex "), 31);
}

TEST_F(Cli, PrettyOutput)
{
    lsm("gen circling -o " + path("c.game"));
    auto r = lsm("--pretty maxmatch -g " + path("c.game"));
    EXPECT_EQ(r.out.rfind("maxmatch\n  method   : exhaustive\n  size     : 4\n", 0), 0u);
}

TEST_F(Cli, VerifySingleCheck)
{
    auto r = lsm("verify 1");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("check id=1 name=circling-gadget status=pass", 0), 0u);
    EXPECT_NE(r.out.find("verify passed=1 failed=0"), std::string::npos);
    EXPECT_EQ(lsm("verify 99").code, 2);
}
