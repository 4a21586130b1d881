#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "jointslu/archive.hpp"
#include "jointslu/data.hpp"

using namespace jointslu;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& command) {
  const std::string wrapped = command + " 2>&1";
  std::array<char, 4096> buffer{};
  RunResult result;
  FILE* pipe = popen(wrapped.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Shared scratch space with a small synthetic dataset, built once.
struct CliFixture {
  fs::path root;
  fs::path data;

  CliFixture() {
    root = fs::temp_directory_path() / ("jointslu_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    data = root / "data";
    const RunResult gen = run(std::string(JOINTSLU_SYNTH_PATH) + " --out " + data.string() +
                              " --sentences 120 --train 90 --valid 15 --test 15");
    REQUIRE(gen.exit_code == 0);
  }
  ~CliFixture() { fs::remove_all(root); }

  std::string cli() const { return JOINTSLU_CLI_PATH; }
  std::string tiny_flags() const {
    return " --hidden_size 16 --num_heads 2 --ffn_size 32 --num_layers 1 --epochs 1"
           " --batch_size 32 --seed 11 --data_dirs " + data.string();
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("unknown config keys exit with code 2") {
  CliFixture fx;
  std::ofstream(fx.root / "bad.json") << R"({"no_such_key": 1})";
  const RunResult r = run(fx.cli() + " train --config " + (fx.root / "bad.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("no_such_key") != std::string::npos);
}

TEST_CASE("missing dataset files exit with code 3 and name the path") {
  CliFixture fx;
  fs::remove(fx.data / "train" / "seq.out");
  const RunResult r =
      run(fx.cli() + " train --out_dir " + (fx.root / "broken").string() + fx.tiny_flags());
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("seq.out") != std::string::npos);
}

TEST_CASE("train writes the run artifacts and reruns byte-identically") {
  CliFixture fx;
  const fs::path out_a = fx.root / "run_a";
  const fs::path out_b = fx.root / "run_b";
  const RunResult a =
      run(fx.cli() + " train --out_dir " + out_a.string() + fx.tiny_flags());
  REQUIRE(a.exit_code == 0);
  CHECK(fs::exists(out_a / "effective_config.json"));
  CHECK(fs::exists(out_a / "train_log.jsonl"));
  CHECK(fs::exists(out_a / "model" / "config.json"));
  CHECK(fs::exists(out_a / "model" / "weights.bin"));

  const RunResult b =
      run(fx.cli() + " train --out_dir " + out_b.string() + fx.tiny_flags());
  REQUIRE(b.exit_code == 0);
  CHECK(file_bytes(out_a / "train_log.jsonl") == file_bytes(out_b / "train_log.jsonl"));
  CHECK(file_bytes(out_a / "model" / "weights.bin") ==
        file_bytes(out_b / "model" / "weights.bin"));

  // the echoed effective config reproduces the run exactly
  const fs::path out_c = fx.root / "run_c";
  const RunResult c = run(fx.cli() + " train --config " +
                          (out_a / "effective_config.json").string() + " --out_dir " +
                          out_c.string());
  REQUIRE(c.exit_code == 0);
  CHECK(file_bytes(out_a / "train_log.jsonl") == file_bytes(out_c / "train_log.jsonl"));
}

TEST_CASE("train log lines are one JSON object per epoch") {
  CliFixture fx;
  const fs::path out = fx.root / "log_run";
  const RunResult r = run(fx.cli() + " train --out_dir " + out.string() + fx.tiny_flags() +
                          " --epochs 3");
  REQUIRE(r.exit_code == 0);
  std::ifstream log(out / "train_log.jsonl");
  std::string line;
  int epochs = 0;
  while (std::getline(log, line)) {
    const auto doc = nlohmann::json::parse(line);
    ++epochs;
    CHECK(doc.at("epoch").get<int>() == epochs);
    CHECK(doc.contains("mean_loss"));
    CHECK(doc.at("alpha").get<double>() + doc.at("beta").get<double>() ==
          doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK(epochs == 3);
}

TEST_CASE("eval prints one parseable JSON report") {
  CliFixture fx;
  const fs::path out = fx.root / "eval_run";
  REQUIRE(run(fx.cli() + " train --out_dir " + out.string() + fx.tiny_flags()).exit_code == 0);
  const RunResult r = run(fx.cli() + " eval --archive " + (out / "model").string() +
                          " --data_dirs " + fx.data.string());
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(r.output);
  CHECK(doc.contains("slot_f1"));
  CHECK(doc.contains("intent_accuracy"));
  CHECK(doc.contains("sentence_accuracy"));
  CHECK(doc.at("counts").contains("gold_spans"));
}

TEST_CASE("per-language evaluation reports the language keys") {
  CliFixture fx;
  const fs::path data_it = fx.root / "data_it";
  REQUIRE(run(std::string(JOINTSLU_SYNTH_PATH) + " --out " + data_it.string() +
              " --language it --seed 77 --sentences 120 --train 90 --valid 15 --test 15")
              .exit_code == 0);
  const fs::path out = fx.root / "multi_run";
  const RunResult t = run(fx.cli() + " train --out_dir " + out.string() + fx.tiny_flags() +
                          "," + data_it.string() + " --languages en,it");
  REQUIRE(t.exit_code == 0);
  const RunResult r = run(fx.cli() + " eval --archive " + (out / "model").string() +
                          " --data_dirs " + data_it.string() + " --languages it" +
                          " --per-language");
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(r.output);
  CHECK(doc.at("per_language").contains("it"));
}

TEST_CASE("predict streams one JSON record per input line") {
  CliFixture fx;
  const fs::path out = fx.root / "pred_run";
  REQUIRE(run(fx.cli() + " train --out_dir " + out.string() + fx.tiny_flags()).exit_code == 0);
  const RunResult r =
      run("printf 'play yesterday by u2\\n\\nweather in rome monday\\n' | " + fx.cli() +
          " predict --archive " + (out / "model").string() + " 2>/dev/null");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string line;
  std::vector<nlohmann::json> records;
  while (std::getline(lines, line)) {
    if (!line.empty()) records.push_back(nlohmann::json::parse(line));
  }
  REQUIRE(records.size() == 3);
  CHECK(records[0].at("tags").size() == 4);
  CHECK(records[0].at("intent").is_string());
  CHECK(records[1].at("intent").is_null());
  CHECK(records[1].at("tags").empty());
  CHECK(records[1].at("spans").empty());
  CHECK(records[2].at("tags").size() == 4);
}

TEST_CASE("project writes a loadable split and honors the entity catalog") {
  CliFixture fx;
  std::ofstream jsonl(fx.root / "aligned.jsonl");
  jsonl << R"({"source_tokens":["play","with","you"],"source_tags":["O","B-song","I-song"],"intent":"play_music","target_tokens":["suona","con","te"],"alignment":[[0,0],[1,1],[2,2]]})"
        << '\n'
        << R"({"source_tokens":["weather","rome"],"source_tags":["O","B-city"],"intent":"get_weather","target_tokens":["meteo","roma"],"alignment":[[0,0],[1,1]]})"
        << '\n';
  jsonl.close();
  std::ofstream(fx.root / "catalog.json") << R"({"city": ["napoli", "la spezia"]})";

  const fs::path out = fx.root / "projected";
  const RunResult r = run(fx.cli() + " project --input " + (fx.root / "aligned.jsonl").string() +
                          " --out_dir " + out.string() + " --entities " +
                          (fx.root / "catalog.json").string() + " --languages it --seed 5");
  REQUIRE(r.exit_code == 0);
  const auto examples = load_split_dir(out.string(), "it");
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].tags == std::vector<std::string>{"O", "B-song", "I-song"});
  CHECK(examples[1].tags[0] == "O");
  CHECK(examples[1].tags[1].rfind("B-city", 0) == 0);
  for (const auto& ex : examples) CHECK(ex.tokens.size() == ex.tags.size());
}

TEST_CASE("pretrain emits an encoder archive that train can warm start from") {
  CliFixture fx;
  const fs::path pre = fx.root / "pretrain_run";
  const RunResult p = run(fx.cli() + " pretrain --out_dir " + pre.string() + fx.tiny_flags() +
                          " --epochs 2");
  REQUIRE(p.exit_code == 0);
  CHECK(fs::exists(pre / "encoder" / "config.json"));
  CHECK(fs::exists(pre / "mlm_log.jsonl"));

  const fs::path fine = fx.root / "warm_run";
  const RunResult ok = run(fx.cli() + " train --out_dir " + fine.string() + fx.tiny_flags() +
                           " --init_from " + (pre / "encoder").string());
  CHECK(ok.exit_code == 0);

  const RunResult mismatch =
      run(fx.cli() + " train --out_dir " + (fx.root / "warm_bad").string() + fx.tiny_flags() +
          " --init_from " + (pre / "encoder").string() + " --hidden_size 32");
  CHECK(mismatch.exit_code == 2);
  CHECK(mismatch.output.find("hidden_size") != std::string::npos);
}

TEST_CASE("intent-only training never touches the slot head") {
  CliFixture fx;
  const fs::path out = fx.root / "intent_only";
  const RunResult r = run(fx.cli() + " train --out_dir " + out.string() + fx.tiny_flags() +
                          " --mode intent-only --epochs 2");
  REQUIRE(r.exit_code == 0);
  const ModelArchive archive = load_archive((out / "model").string());
  // re-derive the initialization: same seed, same shapes
  const ModelParams fresh =
      init_params(archive.config, static_cast<int>(archive.labels.intents.size()),
                  static_cast<int>(archive.labels.slot_tags.size()), derive_seed(11, 0));
  const Matrix quantized = fresh.heads.w_slot.unaryExpr(
      [](double v) { return static_cast<double>(static_cast<float>(v)); });
  CHECK(archive.params.heads.w_slot == quantized);
  CHECK_FALSE(archive.params.heads.w_intent.isZero(0.0));
}

}  // TEST_SUITE
