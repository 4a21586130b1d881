#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "jointslu/archive.hpp"
#include "jointslu/data.hpp"
#include "jointslu/errors.hpp"
#include "jointslu/metrics.hpp"
#include "jointslu/synthetic.hpp"
#include "jointslu/trainer.hpp"

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace jointslu::cli {

namespace {

DatasetSplit load_configured_datasets(const RunConfig& config) {
  if (config.data_dirs.empty()) throw ConfigError("no data_dirs configured");
  std::vector<std::string> languages = config.languages;
  if (languages.empty() && config.data_dirs.size() == 1) languages = {"en"};
  if (languages.size() != config.data_dirs.size()) {
    throw ConfigError("languages must name one tag per data dir");
  }
  std::vector<DatasetSplit> datasets;
  for (std::size_t i = 0; i < config.data_dirs.size(); ++i) {
    datasets.push_back(load_dataset(config.data_dirs[i], languages[i]));
  }
  return datasets.size() == 1 ? std::move(datasets.front()) : merge_multilingual(datasets);
}

ordered_json epoch_to_json(const EpochRecord& record) {
  // Wall-clock seconds stay out of the serialized record so that reruns with
  // the same seed produce byte-identical logs.
  ordered_json doc;
  doc["epoch"] = record.epoch;
  doc["mean_loss"] = record.mean_loss;
  doc["mean_intent_loss"] = record.mean_intent_loss;
  doc["mean_slot_loss"] = record.mean_slot_loss;
  doc["alpha"] = record.alpha;
  doc["beta"] = record.beta;
  doc["val_intent_accuracy"] = record.val_intent_accuracy;
  doc["val_slot_f1"] = record.val_slot_f1;
  doc["val_sentence_accuracy"] = record.val_sentence_accuracy;
  return doc;
}

SentenceMatch sentence_match_from(const RunConfig& config) {
  if (config.sentence_match == "span") return SentenceMatch::kSpanEquality;
  if (config.sentence_match == "raw") return SentenceMatch::kRawTagEquality;
  throw ConfigError("sentence_match must be 'span' or 'raw'");
}

const std::vector<LabeledExample>& pick_split(const DatasetSplit& data,
                                              const std::string& split) {
  if (split == "train") return data.train;
  if (split == "valid") return data.valid;
  if (split == "test") return data.test;
  throw ConfigError("split must be 'train', 'valid' or 'test'");
}

void check_warm_start(const RunConfig& config, const EncoderArchive& warm) {
  const auto mismatch = [&](const char* field, int ours, int theirs) {
    if (ours != theirs) {
      throw ConfigError(std::string("init_from archive disagrees on ") + field + ": " +
                        std::to_string(ours) + " configured vs " + std::to_string(theirs) +
                        " in archive");
    }
  };
  mismatch("num_layers", config.num_layers, warm.config.num_layers);
  mismatch("hidden_size", config.hidden_size, warm.config.hidden_size);
  mismatch("num_heads", config.num_heads, warm.config.num_heads);
  mismatch("ffn_size", config.ffn_size, warm.config.ffn_size);
  mismatch("max_seq_len", config.max_seq_len, warm.config.max_seq_len);
}

struct CurveCell {
  double fraction = 0.0;
  std::string mode;
  struct SeedRun {
    std::uint64_t seed = 0;
    double intent_accuracy = 0.0;
    double slot_f1 = 0.0;
    double sentence_accuracy = 0.0;
  };
  std::vector<SeedRun> per_seed;
};

constexpr int kCurveSeeds = 5;  // five shuffles per cell
const double kCurveFractions[] = {0.25, 0.5, 0.75, 1.0};
const char* kCurveModes[] = {"joint", "intent-only", "slot-only"};

ordered_json curve_to_json(const std::vector<CurveCell>& cells, std::uint64_t base_seed) {
  ordered_json doc;
  doc["fractions"] = std::vector<double>(std::begin(kCurveFractions), std::end(kCurveFractions));
  doc["modes"] = std::vector<std::string>(std::begin(kCurveModes), std::end(kCurveModes));
  doc["seeds_per_cell"] = kCurveSeeds;
  doc["base_seed"] = base_seed;
  ordered_json cell_array = ordered_json::array();
  for (const CurveCell& cell : cells) {
    ordered_json c;
    c["fraction"] = cell.fraction;
    c["mode"] = cell.mode;
    ordered_json runs = ordered_json::array();
    double sum_i = 0, sum_f = 0, sum_s = 0;
    for (const auto& run : cell.per_seed) {
      ordered_json r;
      r["seed"] = run.seed;
      r["intent_accuracy"] = run.intent_accuracy;
      r["slot_f1"] = run.slot_f1;
      r["sentence_accuracy"] = run.sentence_accuracy;
      runs.push_back(std::move(r));
      sum_i += run.intent_accuracy;
      sum_f += run.slot_f1;
      sum_s += run.sentence_accuracy;
    }
    const double n = static_cast<double>(cell.per_seed.size());
    ordered_json mean;
    mean["intent_accuracy"] = sum_i / n;
    mean["slot_f1"] = sum_f / n;
    mean["sentence_accuracy"] = sum_s / n;
    double var_i = 0, var_f = 0, var_s = 0;
    for (const auto& run : cell.per_seed) {
      var_i += std::pow(run.intent_accuracy - sum_i / n, 2);
      var_f += std::pow(run.slot_f1 - sum_f / n, 2);
      var_s += std::pow(run.sentence_accuracy - sum_s / n, 2);
    }
    ordered_json std_dev;
    std_dev["intent_accuracy"] = std::sqrt(var_i / n);
    std_dev["slot_f1"] = std::sqrt(var_f / n);
    std_dev["sentence_accuracy"] = std::sqrt(var_s / n);
    c["per_seed"] = std::move(runs);
    c["mean"] = std::move(mean);
    c["std"] = std::move(std_dev);
    cell_array.push_back(std::move(c));
  }
  doc["cells"] = std::move(cell_array);
  return doc;
}

}  // namespace

int curve_thread_limit() {
  const char* raw = std::getenv("JOINT_SLU_THREADS");
  if (raw == nullptr || *raw == '\0') {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  try {
    const int value = std::stoi(raw);
    if (value < 1) throw ConfigError("JOINT_SLU_THREADS must be a positive integer");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("JOINT_SLU_THREADS is not a positive integer: ") + raw);
  }
}

int cmd_train(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("train needs an out_dir");
  echo_effective_config(config, config.out_dir);
  const DatasetSplit data = load_configured_datasets(config);

  const EncoderParams* warm_encoder = nullptr;
  const Vocabulary* warm_vocab = nullptr;
  EncoderArchive warm;
  if (!config.init_from.empty()) {
    warm = load_encoder_archive(config.init_from);
    check_warm_start(config, warm);
    warm_encoder = &warm.encoder;
    warm_vocab = &warm.vocab;
  }

  const fs::path log_path = fs::path(config.out_dir) / "train_log.jsonl";
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) throw DataError("cannot write " + log_path.string());
  const auto on_epoch = [&](const EpochRecord& record) {
    const std::string line = epoch_to_json(record).dump();
    std::cout << line << '\n' << std::flush;
    log_file << line << '\n' << std::flush;
    std::cerr << "epoch " << record.epoch << " finished in " << record.seconds << " s\n";
  };

  const TrainResult result = train(data, config.model_config(), config.train_config(),
                                   config.lowercase, warm_encoder, warm_vocab, on_epoch);
  save_archive(result.archive, (fs::path(config.out_dir) / "model").string());
  std::cerr << "best epoch " << result.log.best_epoch << ", archive written to "
            << (fs::path(config.out_dir) / "model").string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& config) {
  if (config.archive.empty()) throw ConfigError("eval needs an archive path");
  if (!config.out_dir.empty()) echo_effective_config(config, config.out_dir);
  const ModelArchive archive = load_archive(config.archive);
  const DatasetSplit data = load_configured_datasets(config);
  const std::vector<LabeledExample>& examples = pick_split(data, config.split);
  if (examples.empty()) throw DataError("selected split is empty");

  std::vector<SentencePrediction> preds;
  preds.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    preds.push_back(predict_example(archive, ex.tokens));
  }
  const MetricsReport report = score_predictions(examples, preds, sentence_match_from(config));

  std::set<std::string> langs;
  for (const auto& ex : examples) langs.insert(ex.language);
  const bool with_langs = config.per_language || langs.size() > 1;
  const std::string json = metrics_to_json(report, with_langs);
  std::cout << json << '\n';
  if (!config.out_dir.empty()) {
    std::ofstream out(fs::path(config.out_dir) / "metrics.json");
    out << json << '\n';
  }
  if (!config.conll.empty()) {
    std::ofstream out(config.conll);
    if (!out) throw DataError("cannot write " + config.conll);
    write_conll(out, examples, preds);
  }
  return 0;
}

int cmd_predict(const RunConfig& config, std::istream& in, std::ostream& out) {
  if (config.archive.empty()) throw ConfigError("predict needs an archive path");
  if (!config.out_dir.empty()) echo_effective_config(config, config.out_dir);
  const ModelArchive archive = load_archive(config.archive);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream iss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (iss >> tok) tokens.push_back(tok);
    ordered_json record;
    if (tokens.empty()) {
      record["intent"] = nullptr;
      record["tags"] = ordered_json::array();
      record["spans"] = ordered_json::array();
    } else {
      const SentencePrediction pred = predict_example(archive, tokens);
      record["intent"] = pred.intent;
      record["tags"] = pred.tags;
      ordered_json spans = ordered_json::array();
      for (const Span& span : extract_spans(pred.tags)) {
        ordered_json s;
        s["type"] = span.type;
        s["start"] = span.start;
        s["end"] = span.end;
        spans.push_back(std::move(s));
      }
      record["spans"] = std::move(spans);
    }
    out << record.dump() << '\n' << std::flush;
  }
  return 0;
}

int cmd_learning_curve(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("learning-curve needs an out_dir");
  echo_effective_config(config, config.out_dir);
  const DatasetSplit data = load_configured_datasets(config);

  struct Task {
    std::size_t cell = 0;
    int seed_index = 0;
    double fraction = 0.0;
    TrainMode mode = TrainMode::kJoint;
    std::uint64_t seed = 0;
  };
  std::vector<CurveCell> cells;
  std::vector<Task> tasks;
  std::size_t cell_index = 0;
  for (std::size_t fi = 0; fi < std::size(kCurveFractions); ++fi) {
    for (std::size_t mi = 0; mi < std::size(kCurveModes); ++mi) {
      CurveCell cell;
      cell.fraction = kCurveFractions[fi];
      cell.mode = kCurveModes[mi];
      cell.per_seed.resize(kCurveSeeds);
      cells.push_back(std::move(cell));
      for (int si = 0; si < kCurveSeeds; ++si) {
        Task task;
        task.cell = cell_index;
        task.seed_index = si;
        task.fraction = kCurveFractions[fi];
        task.mode = train_mode_from_name(kCurveModes[mi]);
        // one isolated stream per (fraction, mode, seed index)
        task.seed = derive_seed(derive_seed(derive_seed(config.seed, fi), mi),
                                static_cast<std::uint64_t>(si));
        tasks.push_back(task);
      }
      ++cell_index;
    }
  }

  const int threads = std::min<int>(curve_thread_limit(), static_cast<int>(tasks.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  const auto worker = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= tasks.size() || failed.load()) return;
      const Task& task = tasks[index];
      try {
        DatasetSplit subset;
        subset.train = subset_fraction(data.train, task.fraction, task.seed);
        subset.valid = data.valid;
        subset.test = data.test;
        TrainConfig tc = config.train_config();
        tc.seed = task.seed;
        tc.mode = task.mode;
        const TrainResult result =
            train(subset, config.model_config(), tc, config.lowercase);
        const MetricsReport report = evaluate(result.archive, data.test);
        CurveCell::SeedRun& run = cells[task.cell].per_seed[static_cast<std::size_t>(task.seed_index)];
        run.seed = task.seed;
        run.intent_accuracy = report.intent_accuracy;
        run.slot_f1 = report.slot_f1;
        run.sentence_accuracy = report.sentence_accuracy;
        std::cerr << "cell fraction=" << task.fraction << " mode="
                  << train_mode_name(task.mode) << " seed#" << task.seed_index << " done\n";
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        if (failure.empty()) failure = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load()) throw Error(failure);

  const std::string json = curve_to_json(cells, config.seed).dump(2);
  std::ofstream out(fs::path(config.out_dir) / "learning_curve.json");
  if (!out) throw DataError("cannot write learning_curve.json");
  out << json << '\n';
  std::cout << json << '\n';
  return 0;
}

int cmd_pretrain(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("pretrain needs an out_dir");
  echo_effective_config(config, config.out_dir);
  const DatasetSplit data = load_configured_datasets(config);
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(data.train.size());
  for (const LabeledExample& ex : data.train) corpus.push_back(ex.tokens);

  const fs::path log_path = fs::path(config.out_dir) / "mlm_log.jsonl";
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) throw DataError("cannot write " + log_path.string());
  const auto on_epoch = [&](const EpochRecord& record) {
    ordered_json doc;
    doc["epoch"] = record.epoch;
    doc["mlm_loss"] = record.mean_loss;
    const std::string line = doc.dump();
    std::cout << line << '\n' << std::flush;
    log_file << line << '\n' << std::flush;
  };

  const PretrainResult result =
      pretrain_mlm(corpus, config.model_config(), config.train_config(), config.mask_fraction,
                   config.lowercase, on_epoch);
  save_encoder_archive(result.config, result.vocab, result.encoder,
                       (fs::path(config.out_dir) / "encoder").string());
  return 0;
}

int cmd_project(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("project needs an input JSON-lines path");
  if (config.out_dir.empty()) throw ConfigError("project needs an out_dir");
  echo_effective_config(config, config.out_dir);

  EntityCatalog catalog;
  const bool substitute = !config.entities.empty();
  if (substitute) catalog = load_entity_catalog(config.entities);
  const std::string language = config.languages.empty() ? "xx" : config.languages.front();

  std::mt19937_64 rng(config.seed);
  std::vector<LabeledExample> projected;
  for (const ProjectionRecord& record : load_projection_records(config.input)) {
    AlignmentPair pair;
    pair.source.tokens = record.source_tokens;
    pair.source.tags = record.source_tags;
    pair.source.intent = record.intent;
    pair.target_tokens = record.target_tokens;
    pair.alignment = record.alignment;
    LabeledExample ex;
    ex.tokens = record.target_tokens;
    ex.tags = project_slots(pair);
    ex.intent = record.intent;
    ex.language = language;
    if (substitute) ex = substitute_entities(ex, catalog, rng);
    projected.push_back(std::move(ex));
  }
  write_split_dir(projected, config.out_dir);
  std::cerr << "projected " << projected.size() << " sentences to " << config.out_dir << '\n';
  return 0;
}

int run_guarded(int (*command)(const RunConfig&), const RunConfig& config) {
  try {
    return command(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace jointslu::cli
