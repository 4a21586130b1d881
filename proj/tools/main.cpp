#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "jointslu/errors.hpp"
#include "run_config.hpp"

namespace {

using jointslu::cli::RunConfig;

// Registers one flag per RunConfig field so command-line values override the
// JSON config (which is applied first, see main).
void add_config_flags(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--num_layers", config.num_layers);
  cmd->add_option("--hidden_size", config.hidden_size);
  cmd->add_option("--num_heads", config.num_heads);
  cmd->add_option("--ffn_size", config.ffn_size);
  cmd->add_option("--max_seq_len", config.max_seq_len);
  cmd->add_option("--dropout_keep", config.dropout_keep);
  cmd->add_option("--layernorm_epsilon", config.layernorm_epsilon);
  cmd->add_flag("--internal_dropout,!--no-internal_dropout", config.internal_dropout);
  cmd->add_option("--epochs", config.epochs);
  cmd->add_option("--batch_size", config.batch_size);
  cmd->add_option("--learning_rate", config.learning_rate);
  cmd->add_option("--adam_beta1", config.adam_beta1);
  cmd->add_option("--adam_beta2", config.adam_beta2);
  cmd->add_option("--adam_epsilon", config.adam_epsilon);
  cmd->add_option("--weight_decay", config.weight_decay);
  cmd->add_option("--seed", config.seed);
  cmd->add_option("--mode", config.mode, "joint | intent-only | slot-only");
  cmd->add_option("--mask_fraction", config.mask_fraction);
  cmd->add_option("--data_dirs", config.data_dirs)->delimiter(',');
  cmd->add_option("--languages", config.languages)->delimiter(',');
  cmd->add_flag("--lowercase,!--no-lowercase", config.lowercase);
  cmd->add_option("--out_dir", config.out_dir);
  cmd->add_option("--init_from", config.init_from);
  cmd->add_option("--archive", config.archive);
  cmd->add_option("--input", config.input);
  cmd->add_option("--entities", config.entities);
  cmd->add_option("--split", config.split, "train | valid | test");
  cmd->add_option("--sentence_match", config.sentence_match, "span | raw");
  cmd->add_flag("--per_language,--per-language,!--no-per_language", config.per_language);
  cmd->add_option("--conll", config.conll);
}

// The JSON config must be applied before CLI11 binds flag values, so the
// --config path is scanned out of argv up front.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig config;
  const std::string config_path = find_config_path(argc, argv);
  if (!config_path.empty()) {
    try {
      jointslu::cli::apply_config_file(config, config_path);
    } catch (const jointslu::Error& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
  }

  CLI::App app{"joint intent detection and slot filling"};
  app.require_subcommand(1);
  std::string config_sink;  // consumed above; registered so CLI11 accepts it

  CLI::App* train = app.add_subcommand("train", "fine-tune a joint model");
  CLI::App* eval = app.add_subcommand("eval", "score an archive on a dataset split");
  CLI::App* predict = app.add_subcommand("predict", "per-line JSON predictions from stdin");
  CLI::App* curve = app.add_subcommand("learning-curve",
                                       "train over fractions x modes x 5 shuffles");
  CLI::App* pretrain = app.add_subcommand("pretrain", "masked-language-model warm start");
  CLI::App* project = app.add_subcommand("project",
                                         "build a dataset from aligned translations");
  for (CLI::App* cmd : {train, eval, predict, curve, pretrain, project}) {
    cmd->add_option("--config", config_sink, "flat JSON config; flags override it");
    add_config_flags(cmd, config);
  }

  CLI11_PARSE(app, argc, argv);

  using jointslu::cli::run_guarded;
  if (train->parsed()) return run_guarded(jointslu::cli::cmd_train, config);
  if (eval->parsed()) return run_guarded(jointslu::cli::cmd_eval, config);
  if (predict->parsed()) {
    try {
      return jointslu::cli::cmd_predict(config, std::cin, std::cout);
    } catch (const jointslu::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const jointslu::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 3;
    }
  }
  if (curve->parsed()) return run_guarded(jointslu::cli::cmd_learning_curve, config);
  if (pretrain->parsed()) return run_guarded(jointslu::cli::cmd_pretrain, config);
  if (project->parsed()) return run_guarded(jointslu::cli::cmd_project, config);
  return 2;
}
