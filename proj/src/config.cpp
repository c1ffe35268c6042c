#include "acdc/config.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "acdc/io.hpp"

namespace acdc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Parser {
    RunConfig& cfg;
    int line = 0;

    double to_double(const std::string& key, const std::string& v) {
        char* end = nullptr;
        double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') throw ConfigError(key, line, "expected a number");
        return d;
    }
    int to_int(const std::string& key, const std::string& v) {
        char* end = nullptr;
        long n = std::strtol(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') throw ConfigError(key, line, "expected an integer");
        return static_cast<int>(n);
    }
    std::uint64_t to_u64(const std::string& key, const std::string& v) {
        char* end = nullptr;
        unsigned long long n = std::strtoull(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError(key, line, "expected an unsigned integer");
        return n;
    }
    bool to_bool(const std::string& key, const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError(key, line, "expected true or false");
    }

    void set(const std::string& key, const std::string& v) {
        if (key == "seed") cfg.seed = to_u64(key, v);
        else if (key == "out") cfg.out_dir = v;
        else if (key == "jobs") cfg.jobs = to_int(key, v);
        else if (key == "schedule.beta_min") cfg.schedule.beta_min = to_double(key, v);
        else if (key == "schedule.beta_max") cfg.schedule.beta_max = to_double(key, v);
        else if (key == "solver.n_steps") cfg.correction.solver.n_steps = to_int(key, v);
        else if (key == "solver.method") {
            if (v == "euler") cfg.correction.solver.method = SolverConfig::Method::euler;
            else if (v == "heun") cfg.correction.solver.method = SolverConfig::Method::heun;
            else throw ConfigError(key, line, "expected euler or heun");
        } else if (key == "solver.stochastic") cfg.correction.solver.stochastic = to_bool(key, v);
        else if (key == "correction.t_prime") cfg.correction.t_prime = to_double(key, v);
        else if (key == "correction.guidance") cfg.correction.guidance = to_double(key, v);
        else if (key == "correction.frames") {
            if (v == "all") cfg.correction.correct_first_m = CorrectionConfig::kCorrectAll;
            else cfg.correction.correct_first_m = to_int(key, v);
        } else if (key == "correction.memory") cfg.correction.memory_enabled = to_bool(key, v);
        else if (key == "video.n_frames") cfg.video.n_frames = to_int(key, v);
        else if (key == "video.window") cfg.video.window = to_int(key, v);
        else if (key == "video.t_prime") cfg.video.t_prime = to_double(key, v);
        else if (key == "sampler.temperature") cfg.sampler.temperature = to_double(key, v);
        else if (key == "sampler.top_k") cfg.sampler.top_k = to_int(key, v);
        else if (key == "train.batch") cfg.train.batch_size = to_int(key, v);
        else if (key == "train.steps") cfg.train.steps = to_int(key, v);
        else if (key == "train.lr") cfg.train.learning_rate = to_double(key, v);
        else if (key == "train.weighting") {
            if (v == "one") cfg.train.weighting = DsmWeighting::one;
            else if (v == "one_minus_alpha_bar")
                cfg.train.weighting = DsmWeighting::one_minus_alpha_bar;
            else throw ConfigError(key, line, "expected one or one_minus_alpha_bar");
        } else if (key == "train.dropout") cfg.train.cond_dropout = to_double(key, v);
        else if (key == "train.hidden") cfg.net_hidden = to_int(key, v);
        else if (key == "story.frames") cfg.story.n_frames = to_int(key, v);
        else if (key == "story.characters") cfg.story.n_characters = to_int(key, v);
        else if (key == "story.backgrounds") cfg.story.n_backgrounds = to_int(key, v);
        else if (key == "story.motions") cfg.story.n_motions = to_int(key, v);
        else if (key == "story.p_omit") cfg.story.p_omit = to_double(key, v);
        else if (key == "experiment.stories") cfg.n_stories = to_int(key, v);
        else if (key == "experiment.eval_stories") cfg.n_eval_stories = to_int(key, v);
        else if (key == "experiment.corruption") cfg.corruption = to_double(key, v);
        else if (key == "tokenizer.codebook") cfg.codebook_k = to_int(key, v);
        else if (key == "tokenizer.iters") cfg.kmeans_iters = to_int(key, v);
        else if (key == "prior.sigma") cfg.prior_sigma = to_double(key, v);
        else if (key == "score.backend") {
            if (v != "mixture" && v != "network")
                throw ConfigError(key, line, "expected mixture or network");
            cfg.score_backend = v;
        } else if (key == "theory.trials") cfg.theory.trials = to_int(key, v);
        else if (key == "theory.mc_samples") cfg.theory.mc_samples = to_int(key, v);
        else if (key == "theory.clip") cfg.theory.clip_c = to_double(key, v);
        else if (key == "theory.solver_steps") cfg.theory.solver_steps = to_int(key, v);
        else if (key == "theory.kl_pairs") cfg.theory.kl_pairs = to_int(key, v);
        else throw ConfigError(key, line, "unknown key");
    }
};

void check(bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(field, 0, msg);
}

}  // namespace

void validate_config(const RunConfig& cfg) {
    check(cfg.schedule.beta_min > 0.0 && cfg.schedule.beta_min < cfg.schedule.beta_max,
          "schedule.beta_min", "requires 0 < beta_min < beta_max");
    check(cfg.correction.solver.n_steps >= 0, "solver.n_steps", "must be non-negative");
    check(cfg.correction.t_prime >= 0.0 && cfg.correction.t_prime <= 1.0, "correction.t_prime",
          "must lie in [0, 1]");
    check(cfg.correction.correct_first_m >= CorrectionConfig::kCorrectAll, "correction.frames",
          "must be 'all' or a non-negative count");
    check(cfg.video.n_frames >= 1, "video.n_frames", "must be at least 1");
    check(cfg.video.window >= 1 && cfg.video.window <= cfg.video.n_frames, "video.window",
          "must satisfy 0 < L <= N");
    check(cfg.video.t_prime >= 0.0 && cfg.video.t_prime <= 1.0, "video.t_prime",
          "must lie in [0, 1]");
    check(cfg.sampler.temperature >= 0.0, "sampler.temperature", "must be non-negative");
    check(cfg.sampler.top_k >= 1, "sampler.top_k", "must be at least 1");
    check(cfg.train.batch_size >= 1, "train.batch", "must be positive");
    check(cfg.train.steps >= 0, "train.steps", "must be non-negative");
    check(cfg.train.learning_rate > 0.0, "train.lr", "must be positive");
    check(cfg.train.cond_dropout >= 0.0 && cfg.train.cond_dropout <= 1.0, "train.dropout",
          "must lie in [0, 1]");
    check(cfg.net_hidden >= 1, "train.hidden", "must be positive");
    check(cfg.story.n_frames >= 1, "story.frames", "must be at least 1");
    check(cfg.story.n_characters >= 1, "story.characters", "vocabulary must be non-empty");
    check(cfg.story.n_backgrounds >= 1, "story.backgrounds", "vocabulary must be non-empty");
    check(cfg.story.n_motions >= 1 && cfg.story.n_motions <= 9, "story.motions",
          "vocabulary must be 1..9");
    check(cfg.story.p_omit >= 0.0 && cfg.story.p_omit <= 1.0, "story.p_omit",
          "must lie in [0, 1]");
    check(cfg.n_stories >= 0, "experiment.stories", "must be non-negative");
    check(cfg.n_eval_stories >= 0, "experiment.eval_stories", "must be non-negative");
    check(cfg.corruption >= 0.0 && cfg.corruption <= 1.0, "experiment.corruption",
          "must lie in [0, 1]");
    check(cfg.codebook_k >= 2, "tokenizer.codebook", "needs at least two codewords");
    check(cfg.kmeans_iters >= 0, "tokenizer.iters", "must be non-negative");
    check(cfg.prior_sigma > 0.0, "prior.sigma", "must be positive");
    check(cfg.theory.trials >= 1, "theory.trials", "must be positive");
    check(cfg.theory.mc_samples >= 2, "theory.mc_samples", "must be at least 2");
    check(cfg.theory.clip_c >= 0.0, "theory.clip", "must be non-negative (0 = auto)");
    check(cfg.theory.solver_steps >= 1, "theory.solver_steps", "must be positive");
    check(cfg.theory.kl_pairs >= 1, "theory.kl_pairs", "must be positive");
    check(cfg.jobs >= 1, "jobs", "must be positive");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    Parser parser{cfg};
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        parser.line++;
        std::string stripped = raw.substr(0, raw.find('#'));
        stripped = trim(stripped);
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(stripped, parser.line, "expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        parser.set(key, value);
    }
    validate_config(cfg);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

std::string config_snapshot(const RunConfig& cfg) {
    // jobs is deliberately left out: worker count is an execution knob and
    // never changes any output, so it must not invalidate a run directory
    std::map<std::string, std::string> kv;
    kv["seed"] = std::to_string(cfg.seed);
    kv["out"] = cfg.out_dir;
    kv["schedule.beta_min"] = format_double(cfg.schedule.beta_min);
    kv["schedule.beta_max"] = format_double(cfg.schedule.beta_max);
    kv["solver.n_steps"] = std::to_string(cfg.correction.solver.n_steps);
    kv["solver.method"] =
        cfg.correction.solver.method == SolverConfig::Method::euler ? "euler" : "heun";
    kv["solver.stochastic"] = cfg.correction.solver.stochastic ? "true" : "false";
    kv["correction.t_prime"] = format_double(cfg.correction.t_prime);
    kv["correction.guidance"] = format_double(cfg.correction.guidance);
    kv["correction.frames"] = cfg.correction.correct_first_m == CorrectionConfig::kCorrectAll
                                  ? "all"
                                  : std::to_string(cfg.correction.correct_first_m);
    kv["correction.memory"] = cfg.correction.memory_enabled ? "true" : "false";
    kv["video.n_frames"] = std::to_string(cfg.video.n_frames);
    kv["video.window"] = std::to_string(cfg.video.window);
    kv["video.t_prime"] = format_double(cfg.video.t_prime);
    kv["sampler.temperature"] = format_double(cfg.sampler.temperature);
    kv["sampler.top_k"] = std::to_string(cfg.sampler.top_k);
    kv["train.batch"] = std::to_string(cfg.train.batch_size);
    kv["train.steps"] = std::to_string(cfg.train.steps);
    kv["train.lr"] = format_double(cfg.train.learning_rate);
    kv["train.weighting"] =
        cfg.train.weighting == DsmWeighting::one ? "one" : "one_minus_alpha_bar";
    kv["train.dropout"] = format_double(cfg.train.cond_dropout);
    kv["train.hidden"] = std::to_string(cfg.net_hidden);
    kv["story.frames"] = std::to_string(cfg.story.n_frames);
    kv["story.characters"] = std::to_string(cfg.story.n_characters);
    kv["story.backgrounds"] = std::to_string(cfg.story.n_backgrounds);
    kv["story.motions"] = std::to_string(cfg.story.n_motions);
    kv["story.p_omit"] = format_double(cfg.story.p_omit);
    kv["experiment.stories"] = std::to_string(cfg.n_stories);
    kv["experiment.eval_stories"] = std::to_string(cfg.n_eval_stories);
    kv["experiment.corruption"] = format_double(cfg.corruption);
    kv["tokenizer.codebook"] = std::to_string(cfg.codebook_k);
    kv["tokenizer.iters"] = std::to_string(cfg.kmeans_iters);
    kv["prior.sigma"] = format_double(cfg.prior_sigma);
    kv["score.backend"] = cfg.score_backend;
    kv["theory.trials"] = std::to_string(cfg.theory.trials);
    kv["theory.mc_samples"] = std::to_string(cfg.theory.mc_samples);
    kv["theory.clip"] = format_double(cfg.theory.clip_c);
    kv["theory.solver_steps"] = std::to_string(cfg.theory.solver_steps);
    kv["theory.kl_pairs"] = std::to_string(cfg.theory.kl_pairs);

    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    return out.str();
}

}  // namespace acdc
