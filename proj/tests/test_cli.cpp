#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <gtest/gtest.h>

#include "cvqkd_cli.hpp"

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_in_process(std::vector<std::string> args) {
    args.insert(args.begin(), "cvqkd");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cvqkd::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Runs the installed binary; stderr is discarded.
Result run_binary(const std::string& args) {
    const std::string cmd = std::string(CVQKD_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        return {-1, {}, {}};
    }
    std::string out;
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof(buf), pipe)) > 0;) {
        out.append(buf, n);
    }
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, {}};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST(Cli, RateText) {
    const auto r = run_in_process({"rate", "--t", "0.3", "--ra", "1", "--bound", "collective", "--direction", "reverse"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("key_rate: "), std::string::npos);
    EXPECT_NE(r.out.find("version: cvqkd-bounds 1.0.0"), std::string::npos);
}

TEST(Cli, RateJson) {
    const auto r = run_in_process({"rate", "--t", "0.5", "--ra", "1", "--format", "json", "--base", "bits"});
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["params"]["protocol"], "coherent");
    EXPECT_EQ(j["params"]["t"], 0.5);
    EXPECT_FALSE(j["params"].contains("direction"));
    EXPECT_EQ(j["base"], "bits");
    EXPECT_TRUE(j.contains("key_rate"));
    EXPECT_EQ(j["version"], "cvqkd-bounds 1.0.0");
}

TEST(Cli, CriticalLossCsv) {
    const auto r = run_in_process({"critical-loss", "--bound", "general_w", "--ra", "15", "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 2u);
    ASSERT_EQ(rows[0].size(), rows[1].size());
    EXPECT_EQ(rows[0][7], "critical_value");
    EXPECT_NEAR(std::stod(rows[1][7]), 0.6487856, 1e-6);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_in_process({"rate", "--t", "0.5"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1", "--t", "nan"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1", "--t", "0.5", "--eps", "inf"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1", "--t", "1.5"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1", "--t", "0.5", "--protocol", "cat"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1", "--t", "0.5", "--bound", "collective"}).code, 1);
    EXPECT_EQ(run_in_process({"rate", "--ra", "1", "--t", "0.5", "--direction", "direct"}).code, 1);
    EXPECT_EQ(run_in_process({"critical-loss", "--ra", "1", "--t", "0.5"}).code, 1);
    EXPECT_EQ(run_in_process({"critical-noise", "--ra", "1", "--eps", "0.1", "--t", "0.5"}).code, 1);
    EXPECT_EQ(run_in_process({"frobnicate"}).code, 1);
    const auto w = run_in_process({"rate", "--t", "0.5", "--ra", "1", "--protocol", "squeezed", "--bound", "general_w"});
    EXPECT_EQ(w.code, 1);
    EXPECT_NE(w.err.find("general_w requires coherent"), std::string::npos);
}

TEST(Cli, NumericalFailure) {
    const auto r = run_in_process(
        {"critical-noise", "--bound", "collective", "--direction", "direct", "--ra", "15", "--t", "0.4"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("no-positive-region"), std::string::npos);
    EXPECT_EQ(run_in_process({"critical-loss", "--ra", "1", "--bound", "collective", "--direction", "reverse"}).code, 2);
}

TEST(Cli, HelpAndVersion) {
    EXPECT_EQ(run_in_process({"--help"}).code, 0);
    const auto v = run_in_process({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("cvqkd-bounds 1.0.0"), std::string::npos);
}

TEST(Sweep, RateOverTransmission) {
    const auto r = run_in_process({"sweep", "--x", "t", "--from", "0.1", "--to", "0.9", "--steps", "9", "--bound",
                                   "collective", "--direction", "reverse", "--ra", "1"});
    ASSERT_EQ(r.code, 0);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "i_ab", "eve_term", "key_rate"}));
    EXPECT_EQ(rows.back()[0], "0.9");
    double prev = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 4u);
        const double k = std::stod(rows[i][3]);
        EXPECT_GT(k, prev);
        prev = k;
    }
}

TEST(Sweep, CriticalNoiseWithGaps) {
    const auto r = run_in_process({"sweep", "--x", "t", "--from", "0.3", "--to", "0.7", "--steps", "5", "--quantity",
                                   "critical-noise", "--bound", "collective", "--direction", "direct", "--ra", "15"});
    ASSERT_EQ(r.code, 0);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[1][1], "");
    EXPECT_NE(rows[5][1], "");
    EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Sweep, Validation) {
    EXPECT_EQ(run_in_process({"sweep", "--x", "t", "--ra", "1", "--from", "0.1", "--to", "0.9", "--steps", "1"}).code, 1);
    EXPECT_EQ(run_in_process({"sweep", "--x", "t", "--ra", "1", "--from", "0.9", "--to", "0.1", "--steps", "3"}).code, 1);
    EXPECT_EQ(run_in_process({"sweep", "--x", "t", "--ra", "1", "--from", "0.1", "--to", "0.9", "--steps", "3", "--quantity",
                              "critical-loss"})
                  .code,
              1);
    EXPECT_EQ(run_in_process({"sweep", "--x", "ra", "--from", "0.1", "--to", "1", "--steps", "3"}).code, 1);
}

TEST(Sweep, AllPointsFail) {
    const auto r = run_in_process({"sweep", "--x", "t", "--from", "0.1", "--to", "0.4", "--steps", "3", "--quantity",
                                   "critical-noise", "--bound", "collective", "--direction", "direct", "--ra", "15"});
    EXPECT_EQ(r.code, 2);
}

TEST(Figures, Fig2PeaksNearOnePointFive) {
    const auto r = run_in_process({"fig2"});
    ASSERT_EQ(r.code, 0);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 51u);
    for (std::size_t col : {1u, 2u}) {
        double best = -1.0, arg = 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            ASSERT_NE(rows[i][col], "");
            const double v = std::stod(rows[i][col]);
            if (v > best) {
                best = v;
                arg = std::stod(rows[i][0]);
            }
        }
        EXPECT_GE(arg, 1.3) << col;
        EXPECT_LE(arg, 1.7) << col;
    }
}

TEST(Figures, Fig3DirectCellsEmptyBeyondThreeDecibels) {
    const auto r = run_in_process({"fig3"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.err, "");
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 51u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 5u);
        const double db = std::stod(rows[i][0]);
        for (std::size_t col : {1u, 3u}) {
            if (db > 3.0103) {
                EXPECT_EQ(rows[i][col], "") << db;
            } else if (db < 2.9) {
                EXPECT_NE(rows[i][col], "") << db;
            }
        }
        EXPECT_NE(rows[i][2], "") << db;
        EXPECT_NE(rows[i][4], "") << db;
    }
}

TEST(Constants, Json) {
    const auto r = run_in_process({"constants", "--format", "json"});
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    int lines = 0;
    for (std::string line; std::getline(in, line); ++lines) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_LE(j["gap"].get<double>(), 0.02 * j["analytic"].get<double>());
    }
    EXPECT_EQ(lines, 5);
}

TEST(Batch, MixedLines) {
    const auto path = std::filesystem::temp_directory_path() / "cvqkd_batch_test.ndjson";
    {
        std::ofstream f(path);
        f << R"({"command":"rate","t":0.5,"ra":1})" << '\n'
          << '\n'
          << R"({"command":"rate","t":0.5,"bound":"general_w","protocol":"squeezed"})" << '\n'
          << "not json\n"
          << R"({"command":"critical-noise","bound":"collective","direction":"direct","ra":15,"t":0.4})" << '\n';
    }
    const auto r = run_in_process({"batch", "--input", path.string()});
    std::filesystem::remove(path);
    EXPECT_EQ(r.code, 2);
    std::istringstream in(r.out);
    std::vector<nlohmann::json> out;
    for (std::string line; std::getline(in, line);) {
        out.push_back(nlohmann::json::parse(line));
    }
    ASSERT_EQ(out.size(), 4u);
    EXPECT_TRUE(out[0].contains("key_rate"));
    EXPECT_EQ(out[1]["line"], 3);
    EXPECT_EQ(out[2]["line"], 4);
    EXPECT_EQ(out[3]["line"], 5);
    EXPECT_NE(out[3]["error"].get<std::string>().find("no-positive-region"), std::string::npos);
}

TEST(Batch, MissingFile) { EXPECT_EQ(run_in_process({"batch", "--input", "/nonexistent/x.ndjson"}).code, 1); }

TEST(Binary, ExitCodes) {
    EXPECT_EQ(run_binary("rate --t 0.5 --ra 1").code, 0);
    EXPECT_EQ(run_binary("rate --t 2 --ra 1").code, 1);
    EXPECT_EQ(run_binary("critical-noise --bound collective --direction direct --ra 15 --t 0.4").code, 2);
}

TEST(Binary, Fig3Deterministic) {
    const auto a = run_binary("fig3");
    const auto b = run_binary("fig3");
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_FALSE(a.out.empty());
}
