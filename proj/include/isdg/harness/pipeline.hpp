#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isdg/harness/training.hpp"

namespace isdg::harness {

// File layout shared by the commands:
//   generate   -> <out>/{train,test}.conllu, {train,test}.answers.jsonl, vocab.txt
//   preprocess -> <out>/{split}.jsonl, relation_vocab.txt, meta.json
//   train      -> <out>/model.ckpt, config.txt, fingerprint.txt, train_log.jsonl

struct GenerateRequest {
  std::uint64_t seed = 7;
  int n_train = 100;
  int n_test = 0;
  int vocab_size = 60;
  int min_depth = 1;
  int max_depth = 4;
};

void run_generate(const GenerateRequest& request, const std::string& out_dir);

struct PreprocessRequest {
  std::string conllu_dir;
  std::string tokenizer_vocab;
  std::string out_dir;
  std::string relation_vocab_from;  // relation_vocab.txt to reuse; empty builds one from train
  PreprocessOptions options;
};

struct PreprocessSummary {
  std::map<std::string, int> records;  // per split
  std::map<std::string, int> skipped;
  RelationVocab vocab;
};

PreprocessSummary run_preprocess(const PreprocessRequest& request);

struct TrainRequest {
  std::string config_path;  // optional
  std::map<std::string, std::string> overrides;
  std::string data;  // a .jsonl file or a preprocess output directory
  std::uint64_t seed = 1;
  std::optional<Variant> variant;
  std::string out_dir;
  std::string relation_vocab;  // optional; defaults to relation_vocab.txt beside the data
};

TrainResult run_train(const TrainRequest& request, std::ostream* progress = nullptr);

struct EvalRequest {
  std::string checkpoint;  // model.ckpt or a train output directory
  std::string data;
  std::string report;
  std::string predictions;  // defaults to <report>.predictions.jsonl
  std::string split = "test";
};

EvalReport run_eval(const EvalRequest& request);

struct AnalyzeRequest {
  std::string checkpoint;
  std::string data;
  std::string csv;
  std::string summary;  // defaults to <csv>.summary.json
  std::string split = "test";
};

Analysis run_analyze(const AnalyzeRequest& request);

// Resolves a file or directory argument to a records file of the given split.
std::string resolve_data_path(const std::string& data, const std::string& split);
std::string resolve_checkpoint_path(const std::string& checkpoint);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace isdg::harness
