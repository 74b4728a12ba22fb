#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "isdg/encoder.hpp"
#include "isdg/harness/dataset.hpp"

namespace isdg::harness {

struct TrainConfig {
  EncoderConfig encoder;
  int epochs = 300;
  int batch_size = 8;
  double lr = 1e-3;
  double clip_norm = 1.0;
  // Stop once train EM reaches this value (checked every eval_every epochs); 0 disables.
  double stop_train_em = 0;
  int eval_every = 1;

  std::map<std::string, std::string> to_map() const;
  // Keys of both the encoder and the training loop; unknown keys are errors.
  void apply(const std::map<std::string, std::string>& values);
  bool operator==(const TrainConfig&) const = default;
};

// Flat "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::string config_text(const std::map<std::string, std::string>& values);

// FNV-1a over the canonical config text and the relation vocabulary.
std::string fingerprint(const TrainConfig& config, const std::vector<std::string>& relation_vocab);

struct LogEntry {
  long step = 0;
  double loss = 0;
  double lr = 0;
  double grad_norm = 0;
};
std::string log_line(const LogEntry& entry);

struct ExamplePrediction {
  std::string id;
  int start = -1;
  int end = -1;
  std::string text;
  double f1 = 0;
  double em = 0;
  bool operator==(const ExamplePrediction&) const = default;
};

struct EvalReport {
  double f1 = 0;
  double em = 0;
  int count = 0;
  std::vector<ExamplePrediction> per_example;
  bool operator==(const EvalReport&) const = default;
};

std::string report_json(const EvalReport& report);
std::string predictions_jsonl(const EvalReport& report);
// Recomputes the report from persisted predictions and the gold answers.
EvalReport report_from_predictions(std::string_view predictions_jsonl, const std::vector<Record>& records);

struct TrainedModel {
  TrainConfig config;
  std::vector<std::string> relation_vocab;
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::unique_ptr<Model<float>> model;
};

struct TrainResult {
  TrainedModel trained;
  std::vector<LogEntry> log;
  int epochs_run = 0;
  double final_loss = 0;  // mean loss of the last epoch
  double last_train_em = -1;
};

// Throws ValidationError when records disagree on the relation vocabulary or
// do not match expected_vocab (if non-empty); the message carries the diff.
std::vector<std::string> check_vocabulary(const std::vector<Record>& records,
                                          const std::vector<std::string>& expected_vocab);

// Sizes the vocabularies from the data, then trains. Records without gold are
// skipped. Each log entry is also written to log_out when given.
TrainResult train(TrainConfig config, const std::vector<Record>& records, std::uint64_t seed,
                  std::ostream* log_out = nullptr);

EvalReport evaluate(Model<float>& model, const std::vector<Record>& records);

void save_trained(const std::string& path, const TrainedModel& trained);
TrainedModel load_trained(const std::string& path);

struct AnalysisRow {
  std::string example_id;
  int head = 0;
  int node = 0;
  int argmax = 0;
  int distance = 0;
};

struct Analysis {
  std::vector<AnalysisRow> rows;
  double mean_distance = 0;
  int examples = 0;
};

// Global attention distances of the full variant; throws ValidationError for
// variants without a global component or inputs beyond max_len.
Analysis analyze(Model<float>& model, const std::vector<Record>& records);
std::string analysis_csv(const Analysis& analysis);
std::string analysis_summary_json(const Analysis& analysis);

}  // namespace isdg::harness
