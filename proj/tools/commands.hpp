#pragma once

#include <iosfwd>

#include "run_config.hpp"

namespace jointslu::cli {

// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_predict(const RunConfig& config, std::istream& in, std::ostream& out);
int cmd_learning_curve(const RunConfig& config);
int cmd_pretrain(const RunConfig& config);
int cmd_project(const RunConfig& config);

// Maps the library error taxonomy onto exit codes and prints the message.
int run_guarded(int (*command)(const RunConfig&), const RunConfig& config);

// JOINT_SLU_THREADS caps parallel learning-curve cells (default: hardware).
int curve_thread_limit();

}  // namespace jointslu::cli
