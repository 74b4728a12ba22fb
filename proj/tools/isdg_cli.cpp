#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isdg/errors.hpp"
#include "isdg/harness/pipeline.hpp"

using namespace isdg;
using namespace isdg::harness;

namespace {

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got " + item);
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISDG encoder toolkit: synthetic corpora, preprocessing, training, evaluation, analysis"};
  app.require_subcommand(1);

  GenerateRequest gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic CoNLL-U corpus with gold answers");
  generate->add_option("--seed", gen.seed, "Generator seed")->required();
  generate->add_option("--n", gen.n_train, "Training examples")->required();
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--test-n", gen.n_test, "Held-out examples");
  generate->add_option("--vocab-size", gen.vocab_size, "Content words in the lexicon");
  generate->add_option("--min-depth", gen.min_depth, "Minimum tree depth");
  generate->add_option("--max-depth", gen.max_depth, "Maximum tree depth");

  PreprocessRequest pre;
  auto* preprocess = app.add_subcommand("preprocess", "Align, build graphs and soft paths, write JSON lines");
  preprocess->add_option("--conllu-dir", pre.conllu_dir, "Directory of <split>.conllu files")->required();
  preprocess->add_option("--tokenizer-vocab", pre.tokenizer_vocab, "Wordpiece vocabulary file")->required();
  preprocess->add_option("--out", pre.out_dir, "Output directory")->required();
  preprocess->add_option("--relation-vocab-from", pre.relation_vocab_from, "Reuse an existing relation_vocab.txt");
  preprocess->add_option("--max-len", pre.options.max_len, "Maximum node count");
  preprocess->add_option("--max-path-len", pre.options.max_path_len, "Stored soft path bound");

  TrainRequest tr;
  std::string variant;
  std::vector<std::string> sets;
  auto* train_cmd = app.add_subcommand("train", "Train a span extractor");
  train_cmd->add_option("--config", tr.config_path, "key = value config file");
  train_cmd->add_option("--data", tr.data, "Records file or preprocess directory")->required();
  train_cmd->add_option("--seed", tr.seed, "Training seed")->required();
  train_cmd->add_option("--variant", variant, "Ablation variant")->check(CLI::IsMember({"pos", "local", "full"}));
  train_cmd->add_option("--out", tr.out_dir, "Output directory")->required();
  train_cmd->add_option("--set", sets, "Config override key=value (repeatable)");
  train_cmd->add_option("--relation-vocab", tr.relation_vocab, "Expected relation_vocab.txt");

  EvalRequest ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint with SQuAD-style F1 / EM");
  eval_cmd->add_option("--ckpt", ev.checkpoint, "Checkpoint file or train output directory")->required();
  eval_cmd->add_option("--data", ev.data, "Records file or preprocess directory")->required();
  eval_cmd->add_option("--report", ev.report, "Report JSON path")->required();
  eval_cmd->add_option("--predictions", ev.predictions, "Per-example predictions (JSON lines)");
  eval_cmd->add_option("--split", ev.split, "Split used when --data is a directory");

  AnalyzeRequest an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Export global attention distances");
  analyze_cmd->add_option("--ckpt", an.checkpoint, "Checkpoint file or train output directory")->required();
  analyze_cmd->add_option("--data", an.data, "Records file or preprocess directory")->required();
  analyze_cmd->add_option("--csv", an.csv, "Per-node CSV path")->required();
  analyze_cmd->add_option("--summary", an.summary, "Summary JSON path");
  analyze_cmd->add_option("--split", an.split, "Split used when --data is a directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      run_generate(gen, gen_out);
      std::cout << "wrote corpus to " << gen_out << "\n";
    } else if (preprocess->parsed()) {
      const auto summary = run_preprocess(pre);
      for (const auto& [split, count] : summary.records) {
        std::cout << split << ": " << count << " records, " << summary.skipped.at(split) << " skipped\n";
      }
      std::cout << "relation vocabulary: " << summary.vocab.size() << " types\n";
    } else if (train_cmd->parsed()) {
      if (!variant.empty()) tr.variant = parse_variant(variant);
      tr.overrides = parse_overrides(sets);
      run_train(tr, &std::cout);
    } else if (eval_cmd->parsed()) {
      const auto report = run_eval(ev);
      std::printf("f1 %.4f em %.4f over %d examples\n", report.f1, report.em, report.count);
    } else if (analyze_cmd->parsed()) {
      const auto analysis = run_analyze(an);
      std::printf("mean attention distance %.4f over %zu rows\n", analysis.mean_distance, analysis.rows.size());
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
