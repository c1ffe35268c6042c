#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "acdc/cli.hpp"
#include "acdc/io.hpp"

using namespace acdc;
namespace fs = std::filesystem;

namespace {

// small, fast configuration shared by the command tests
const char* kSmallConfig = R"(
experiment.stories = 12
experiment.eval_stories = 4
train.steps = 5
tokenizer.iters = 5
video.n_frames = 4
video.window = 2
solver.n_steps = 24
)";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("acdc_test_" + name);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("snapshot round trips losslessly") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        std::string snap = config_snapshot(cfg);
        RunConfig back = parse_config_text(snap);
        CHECK(config_snapshot(back) == snap);
        CHECK(back.n_stories == 12);
        CHECK(back.video.window == 2);
    }

    TEST_CASE("defaults match the documented values") {
        RunConfig cfg = parse_config_text("");
        CHECK(cfg.schedule.beta_min == 0.1);
        CHECK(cfg.schedule.beta_max == 20.0);
        CHECK(cfg.correction.t_prime == 0.45);
        CHECK(cfg.video.t_prime == 0.5);
        CHECK(cfg.correction.guidance == 2.0);
        CHECK(cfg.correction.correct_first_m == CorrectionConfig::kCorrectAll);
        CHECK(cfg.story.p_omit == 0.7);
        CHECK(cfg.codebook_k == 64);
        CHECK(cfg.score_backend == "mixture");
    }

    TEST_CASE("unknown keys and bad values name the field") {
        CHECK_THROWS_WITH_AS(parse_config_text("nope.key = 1"),
                             doctest::Contains("nope.key"), ConfigError);
        CHECK_THROWS_WITH_AS(parse_config_text("sampler.top_k = banana"),
                             doctest::Contains("sampler.top_k"), ConfigError);
        CHECK_THROWS_WITH_AS(parse_config_text("story.characters = 0"),
                             doctest::Contains("story.characters"), ConfigError);
        CHECK_THROWS_WITH_AS(parse_config_text("correction.frames = -3"),
                             doctest::Contains("correction.frames"), ConfigError);
    }

    TEST_CASE("comments and blank lines are ignored") {
        RunConfig cfg = parse_config_text("# comment\n\n  seed = 7 # trailing\n");
        CHECK(cfg.seed == 7);
    }
}

TEST_SUITE("commands") {
    TEST_CASE("gen-data twice produces byte-identical corpora") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir a("gen_a"), b("gen_b");
        CHECK(cli::cmd_gen_data(cfg, a.str()) == cli::kExitOk);
        CHECK(cli::cmd_gen_data(cfg, b.str()) == cli::kExitOk);
        for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
            if (!entry.is_regular_file()) continue;
            fs::path rel = fs::relative(entry.path(), a.path);
            CHECK(files_byte_equal(entry.path(), b.path / rel));
        }
    }

    TEST_CASE("zero stories writes an empty manifest and succeeds") {
        RunConfig cfg = parse_config_text("experiment.stories = 0");
        TempDir dir("gen_zero");
        CHECK(cli::cmd_gen_data(cfg, dir.str()) == cli::kExitOk);
        std::string manifest = read_text_file(dir.path / "corpus" / "story" / "manifest.txt");
        CHECK(manifest.find("\n0\n") != std::string::npos);
    }

    TEST_CASE("train requires a corpus") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir dir("train_missing");
        CHECK_THROWS_WITH_AS(cli::cmd_train(cfg, dir.str()), doctest::Contains("gen-data"),
                             std::runtime_error);
    }

    TEST_CASE("full command chain with reproducible metrics") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir dir("chain");
        REQUIRE(cli::cmd_gen_data(cfg, dir.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_train(cfg, dir.str()) == cli::kExitOk);

        // loss trace has exactly train.steps rows
        std::string trace = read_text_file(dir.path / "checkpoints" / "train_loss.csv");
        int rows = 0;
        for (char c : trace) rows += c == '\n';
        CHECK(rows == cfg.train.steps);

        // rerunning train reproduces the checkpoints byte for byte
        std::string codebook_before =
            read_text_file(dir.path / "checkpoints" / "codebook.txt");
        std::string net_before = read_text_file(dir.path / "checkpoints" / "score_net.txt");
        REQUIRE(cli::cmd_train(cfg, dir.str()) == cli::kExitOk);
        CHECK(read_text_file(dir.path / "checkpoints" / "codebook.txt") == codebook_before);
        CHECK(read_text_file(dir.path / "checkpoints" / "score_net.txt") == net_before);

        REQUIRE(cli::cmd_run(cfg, dir.str(), "story") == cli::kExitOk);
        fs::path metrics = dir.path / "runs" / "story" / "metrics.csv";
        REQUIRE(fs::exists(metrics));

        // row count contract: stories x frames data rows (+1 header)
        std::string text = read_text_file(metrics);
        int lines = 0;
        for (char c : text) lines += c == '\n';
        CHECK(lines == 4 * 6 + 1);

        // baseline equals a correction-count-0 story run bitwise
        RunConfig cfg0 = cfg;
        cfg0.correction.correct_first_m = 0;
        TempDir dir0("chain_m0");
        REQUIRE(cli::cmd_gen_data(cfg0, dir0.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_train(cfg0, dir0.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_run(cfg0, dir0.str(), "story") == cli::kExitOk);
        REQUIRE(cli::cmd_run(cfg0, dir0.str(), "baseline") == cli::kExitOk);
        CHECK(files_byte_equal(dir0.path / "runs" / "story" / "metrics.csv",
                               dir0.path / "runs" / "baseline" / "metrics.csv"));

        // reproducibility: replay the run from the snapshot alone
        RunConfig snap_cfg =
            parse_config_text(read_text_file(dir.path / "config.snapshot.txt"));
        TempDir replay("chain_replay");
        REQUIRE(cli::cmd_gen_data(snap_cfg, replay.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_train(snap_cfg, replay.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_run(snap_cfg, replay.str(), "story") == cli::kExitOk);
        CHECK(files_byte_equal(metrics, replay.path / "runs" / "story" / "metrics.csv"));

        // video mode obeys the same row contract
        REQUIRE(cli::cmd_run(cfg, dir.str(), "video") == cli::kExitOk);
        std::string vtext =
            read_text_file(dir.path / "runs" / "video" / "metrics.csv");
        int vlines = 0;
        for (char c : vtext) vlines += c == '\n';
        CHECK(vlines == 4 * 4 + 1);

        // report renders grids with the documented layout
        REQUIRE(cli::cmd_report(dir.str()) == cli::kExitOk);
        int h = 0, w = 0;
        read_pgm(dir.path / "report" / "story_story_0000_grid.pgm", &h, &w);
        CHECK(h == 2 * 16);
        CHECK(w == 6 * 16);
        // regenerating the report is byte-idempotent
        std::string report_before = read_text_file(dir.path / "report" / "report.txt");
        REQUIRE(cli::cmd_report(dir.str()) == cli::kExitOk);
        CHECK(read_text_file(dir.path / "report" / "report.txt") == report_before);

        // baseline report carries no corrected row
        REQUIRE(cli::cmd_report(dir0.str()) == cli::kExitOk);
        read_pgm(dir0.path / "report" / "story_story_0000_grid.pgm", &h, &w);
        CHECK(h == 16);
    }

    TEST_CASE("stale artifacts are rejected") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir dir("stale");
        REQUIRE(cli::cmd_gen_data(cfg, dir.str()) == cli::kExitOk);
        RunConfig other = cfg;
        other.seed = cfg.seed + 1;
        CHECK_THROWS_WITH_AS(cli::cmd_train(other, dir.str()),
                             doctest::Contains("different configuration"), std::runtime_error);
    }

    TEST_CASE("run without checkpoints reports them missing") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir dir("run_missing");
        REQUIRE(cli::cmd_gen_data(cfg, dir.str()) == cli::kExitOk);
        CHECK_THROWS_WITH_AS(cli::cmd_run(cfg, dir.str(), "story"),
                             doctest::Contains("train"), std::runtime_error);
    }

    TEST_CASE("the lock file blocks concurrent writers") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir dir("locked");
        std::ofstream(dir.path / "lock") << "held\n";
        CHECK_THROWS_WITH_AS(cli::cmd_gen_data(cfg, dir.str()), doctest::Contains("lock"),
                             std::runtime_error);
    }

    TEST_CASE("report on an empty directory warns and succeeds") {
        TempDir dir("report_empty");
        CHECK(cli::cmd_report(dir.str()) == cli::kExitOk);
    }

    TEST_CASE("train with zero steps leaves the network at its initialization") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        cfg.train.steps = 0;
        TempDir dir("train_zero");
        REQUIRE(cli::cmd_gen_data(cfg, dir.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_train(cfg, dir.str()) == cli::kExitOk);
        CHECK(read_text_file(dir.path / "checkpoints" / "train_loss.csv").empty());
        std::string first = read_text_file(dir.path / "checkpoints" / "score_net.txt");
        REQUIRE(cli::cmd_train(cfg, dir.str()) == cli::kExitOk);
        CHECK(read_text_file(dir.path / "checkpoints" / "score_net.txt") == first);
    }

    TEST_CASE("verify-theory emits reports and passes on a reduced budget") {
        RunConfig cfg = parse_config_text(
            "theory.trials = 200\ntheory.mc_samples = 1500\ntheory.solver_steps = 128\n"
            "theory.kl_pairs = 6\n");
        TempDir dir("theory_cmd");
        CHECK(cli::cmd_verify_theory(cfg, dir.str()) == cli::kExitOk);
        CHECK(fs::exists(dir.path / "theory" / "kl_curves.csv"));
        CHECK(fs::exists(dir.path / "theory" / "bounds.csv"));
        CHECK(fs::exists(dir.path / "theory" / "conditional.csv"));
        std::string summary = read_text_file(dir.path / "theory" / "summary.txt");
        CHECK(summary.find("ALL-PASS") != std::string::npos);
        CHECK(summary.find("FAIL ") == std::string::npos);
        // rows report both bound conventions
        std::string bounds = read_text_file(dir.path / "theory" / "bounds.csv");
        CHECK(bounds.find("bound_alt,bound_consistent") != std::string::npos);
    }

    TEST_CASE("jobs > 1 reproduces single-threaded metrics byte for byte") {
        RunConfig cfg = parse_config_text(kSmallConfig);
        TempDir a("jobs_1"), b("jobs_2");
        RunConfig cfg2 = cfg;
        cfg2.jobs = 2;
        REQUIRE(cli::cmd_gen_data(cfg, a.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_train(cfg, a.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_run(cfg, a.str(), "story") == cli::kExitOk);
        REQUIRE(cli::cmd_gen_data(cfg2, b.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_train(cfg2, b.str()) == cli::kExitOk);
        REQUIRE(cli::cmd_run(cfg2, b.str(), "story") == cli::kExitOk);
        CHECK(files_byte_equal(a.path / "runs" / "story" / "metrics.csv",
                               b.path / "runs" / "story" / "metrics.csv"));
    }
}

TEST_SUITE("argv dispatch") {
    namespace {
    int run(std::vector<std::string> args) {
        std::vector<char*> argv;
        static std::string prog = "acdc";
        argv.push_back(prog.data());
        for (auto& a : args) argv.push_back(a.data());
        return cli::run_main(static_cast<int>(argv.size()), argv.data());
    }
    }  // namespace

    TEST_CASE("unknown flags and commands exit with the config code") {
        CHECK(run({"run", "--bogus"}) == cli::kExitConfig);
        CHECK(run({"frobnicate"}) == cli::kExitConfig);
        CHECK(run({}) == cli::kExitConfig);
        CHECK(run({"run", "--seed", "banana"}) == cli::kExitConfig);
    }

    TEST_CASE("missing corpus surfaces as a runtime error code") {
        TempDir dir("argv_runtime");
        CHECK(run({"train", "--out", dir.str()}) == cli::kExitRuntime);
    }

    TEST_CASE("seed override changes the effective config") {
        TempDir dir("argv_seed");
        std::string cfg_path = (dir.path / "config.txt").string();
        write_text_file(cfg_path, "experiment.stories = 2\n");
        CHECK(run({"gen-data", "--config", cfg_path, "--out", dir.str(), "--seed", "99"}) ==
              cli::kExitOk);
        std::string snap = read_text_file(dir.path / "config.snapshot.txt");
        CHECK(snap.find("seed = 99") != std::string::npos);
    }

    TEST_CASE("the environment root supplies a default output directory") {
        TempDir root("env_root");
        setenv("ACDC_OUT_ROOT", root.str().c_str(), 1);
        CHECK(run({"report"}) == cli::kExitOk);
        unsetenv("ACDC_OUT_ROOT");
        CHECK(fs::exists(root.path / "run" / "report" / "report.txt"));
    }
}
