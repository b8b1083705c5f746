#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bu/checkpoint.hpp"
#include "bu/config.hpp"
#include "bu/data.hpp"
#include "bu/eval.hpp"
#include "bu/unlearn.hpp"

namespace bu {

/// A pipeline stage failed; what() is prefixed with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

LabeledDataset build_dataset(const ExperimentConfig& cfg);

/// Trains w0 on the full training set; timing and losses land in the result.
UnlearnResult train_original(const ExperimentConfig& cfg, const LabeledDataset& dataset);

/// Runs one unlearning method (retrain included) with its configured settings.
UnlearnResult run_method(const ExperimentConfig& cfg, Method method, const Classifier& original,
                         SplitAccess& split);

Provenance provenance_for(const ExperimentConfig& cfg, const UnlearnResult& result);

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, Method method);

/// One method's entry as it appears in results.json.
std::string eval_report_json(Method method, const EvalReport& report);

/// Row order of table1.csv.
std::vector<Method> report_order();

/// Regenerates every table from `run_dir`/config.cfg and the stored
/// checkpoints: results.json, table1.csv, asr.csv, entropy.csv, timing.csv and,
/// for 2D data, rasters/<method>.pgm plus a JSON sidecar.
void emit_report(const std::filesystem::path& run_dir);

/// Full pipeline into cfg.output_dir. Artifacts are staged in a sibling
/// directory and moved into place only when every stage succeeds.
void run_experiment(const ExperimentConfig& cfg);

}  // namespace bu
