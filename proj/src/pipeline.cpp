#include "malclass/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"
#include "malclass/evaluator.hpp"
#include "malclass/parallel.hpp"
#include "malclass/report.hpp"
#include "malclass/selector.hpp"
#include "malclass/synth.hpp"
#include "malclass/tokenizer.hpp"
#include "malclass/vectorizer.hpp"

namespace malclass {

namespace {

ArtifactPaths paths_for(const PipelineConfig& config) { return {config.workdir}; }

void prepare(const PipelineConfig& config) {
  config.validate();
  set_thread_count(config.threads);
}

std::vector<BehaviorReport> read_reports(const ArtifactPaths& paths) {
  std::ifstream in(paths.reports_jsonl(), std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, "run ingest first: missing " + paths.reports_jsonl().string());
  std::vector<BehaviorReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedJson, "corrupt line in " + paths.reports_jsonl().string());
    reports.push_back(from_normalized_json(j));
  }
  return reports;
}

struct FeatureMeta {
  std::size_t n_docs = 0;
  std::size_t dim = 0;
  bool l2 = false;
};

void write_meta(const ArtifactPaths& paths, const FeatureMeta& meta) {
  csv::write_file(paths.meta_csv(), {"key", "value"},
                  {{"n_docs", std::to_string(meta.n_docs)},
                   {"dim", std::to_string(meta.dim)},
                   {"l2", meta.l2 ? "true" : "false"}});
}

FeatureMeta read_meta(const ArtifactPaths& paths) {
  const auto table = csv::read_file(paths.meta_csv(), {"key", "value"});
  FeatureMeta meta;
  for (const auto& row : table.rows) {
    if (row.size() != 2) continue;
    if (row[0] == "n_docs") meta.n_docs = static_cast<std::size_t>(csv::parse_int(row[1]));
    if (row[0] == "dim") meta.dim = static_cast<std::size_t>(csv::parse_int(row[1]));
    if (row[0] == "l2") meta.l2 = row[1] == "true";
  }
  return meta;
}

FeatureMatrix read_part(const ArtifactPaths& paths, const std::string& part, const std::string& kind,
                        const FeatureMeta& meta) {
  return read_matrix(paths.matrix_csv(part, kind), paths.labels_csv(part), meta.dim, kind == "tfidf" && meta.l2);
}

/// The refined feature space used for training and evaluation.
FeatureMatrix refined(const FeatureMatrix& matrix, const std::vector<std::size_t>& kept, bool l2) {
  if (kept.size() == matrix.dim) return matrix;
  auto projected = select_columns(matrix, kept);
  if (l2) l2_normalize(projected);
  return projected;
}

std::string summary(const std::string& stage, const std::string& detail) { return stage + ": " + detail; }

}  // namespace

std::string run_synth(const PipelineConfig& config) {
  prepare(config);
  const auto paths = paths_for(config);
  const auto samples = generate_corpus(default_spec(config.scale, derive_seed(config.seed, 1)));
  const auto manifest = write_corpus(paths.corpus_dir(), samples);
  return summary("synth", std::to_string(samples.size()) + " reports, manifest " + manifest.generic_string());
}

std::string run_ingest(const PipelineConfig& config) {
  prepare(config);
  const auto paths = paths_for(config);
  const auto entries = read_manifest(config.manifest_path());

  std::vector<std::optional<BehaviorReport>> parsed(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto& e = entries[i];
    try {
      parsed[i] = parse_report(read_text_file(e.path), e.label, e.sample_id);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::EmptyTrace) throw;
    }
  });

  std::filesystem::create_directories(paths.ingest_dir());
  std::ofstream out(paths.reports_jsonl(), std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + paths.reports_jsonl().string());
  std::size_t kept = 0, calls = 0;
  for (const auto& report : parsed) {
    if (!report) continue;
    ++kept;
    calls += report->calls.size();
    out << to_normalized_json(*report).dump() << '\n';
    if (config.write_partitions)
      write_element_files(partition_elements(*report), paths.partitions_dir(), report->sample_id);
  }
  return summary("ingest", std::to_string(kept) + " reports, " + std::to_string(entries.size() - kept) +
                               " empty traces dropped, " + std::to_string(calls) + " calls");
}

std::string run_featurize(const PipelineConfig& config) {
  prepare(config);
  const auto paths = paths_for(config);
  const auto reports = read_reports(paths);
  if (reports.empty()) throw Error(ErrorCode::EmptyCorpus, "ingest produced no reports");

  const TokenizeOptions options{config.max_args, config.reset_at_process};
  std::vector<TokenDocument> docs(reports.size());
  for (int n : config.ngram_sizes) {
    const int sizes[] = {n};
    std::vector<TokenDocument> per_n(reports.size());
    parallel_for(reports.size(), [&](std::size_t i) { per_n[i] = make_document(reports[i], sizes, options); });
    write_ngram_csv(paths.ngram_csv(n), per_n);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      docs[i].sample_id = per_n[i].sample_id;
      docs[i].label = per_n[i].label;
      for (auto& [gram, count] : per_n[i].ngrams) docs[i].ngrams[gram] += count;
    }
  }

  std::vector<ClassLabel> labels;
  for (const auto& d : docs) labels.push_back(d.label);
  const auto split = stratified_split(labels, config.split_spec());
  std::vector<csv::Row> split_rows;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const bool train = std::binary_search(split.train.begin(), split.train.end(), i);
    split_rows.push_back({docs[i].sample_id, std::string(label_name(docs[i].label)), train ? "train" : "test"});
  }
  csv::write_file(paths.split_csv(), {"sample_id", "label", "set"}, split_rows);

  std::vector<TokenDocument> train_docs, test_docs;
  for (auto i : split.train) train_docs.push_back(docs[i]);
  for (auto i : split.test) test_docs.push_back(docs[i]);

  const auto vocab = build_vocabulary(train_docs);
  write_vocabulary(paths.vocabulary_csv(), vocab);
  write_meta(paths, {vocab.n_docs(), vocab.size(), config.l2});

  write_matrix(paths.matrix_csv("train", "tfidf"), paths.labels_csv("train"), tfidf_matrix(train_docs, vocab, config.l2));
  write_matrix(paths.matrix_csv("train", "freq"), paths.labels_csv("train"), frequency_matrix(train_docs, vocab));
  write_matrix(paths.matrix_csv("test", "tfidf"), paths.labels_csv("test"), tfidf_matrix(test_docs, vocab, config.l2));
  write_matrix(paths.matrix_csv("test", "freq"), paths.labels_csv("test"), frequency_matrix(test_docs, vocab));
  return summary("featurize", std::to_string(train_docs.size()) + " train / " + std::to_string(test_docs.size()) +
                                  " test documents, vocabulary " + std::to_string(vocab.size()));
}

std::string run_select(const PipelineConfig& config) {
  prepare(config);
  const auto paths = paths_for(config);
  const auto meta = read_meta(paths);
  const auto vocab = read_vocabulary(paths.vocabulary_csv(), meta.n_docs);
  auto tfidf = read_part(paths, "train", "tfidf", meta);
  auto freq = read_part(paths, "train", "freq", meta);
  if (config.select_on_all) {
    tfidf = stack_rows(tfidf, read_part(paths, "test", "tfidf", meta));
    freq = stack_rows(freq, read_part(paths, "test", "freq", meta));
  }
  const auto mask = hybrid_select(tfidf, freq, vocab, config.selection);
  write_selection_report(paths.selection_report(), mask);
  write_mask(paths.mask_csv(), mask, vocab);

  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.2f%%", 100.0 * static_cast<double>(mask.kept.size()) / static_cast<double>(vocab.size()));
  return summary("select", std::to_string(mask.kept.size()) + " of " + std::to_string(vocab.size()) + " features kept (" +
                               ratio + ")");
}

std::string run_train(const PipelineConfig& config) {
  prepare(config);
  const auto paths = paths_for(config);
  const auto meta = read_meta(paths);
  const auto kept = read_mask(paths.mask_csv());
  const auto train = refined(read_part(paths, "train", "tfidf", meta), kept, meta.l2);
  std::string names;
  for (auto kind : config.models) {
    save_model(malclass::train(kind, train, config.params_for(kind)), paths.model_file(std::string(kind_name(kind))));
    names += (names.empty() ? "" : ", ") + std::string(kind_name(kind));
  }
  return summary("train", std::to_string(config.models.size()) + " model(s) on " + std::to_string(train.n_rows()) +
                              " rows x " + std::to_string(train.dim) + " features [" + names + "]");
}

std::string run_evaluate(const PipelineConfig& config) {
  prepare(config);
  const auto paths = paths_for(config);
  const auto meta = read_meta(paths);
  const auto kept = read_mask(paths.mask_csv());
  const auto test = refined(read_part(paths, "test", "tfidf", meta), kept, meta.l2);

  std::vector<std::pair<std::string, EvalReport>> results;
  std::ostringstream detail;
  for (auto kind : config.models) {
    const std::string name(kind_name(kind));
    const auto model = load_model(paths.model_file(name));
    const auto report = evaluate(model, test);
    const std::string stem = config.models.size() == 1 ? "confusion" : name + ".confusion";
    write_confusion_csv(paths.eval_dir() / (stem + ".csv"), report.confusion);
    write_confusion_svg(paths.eval_dir() / (stem + ".svg"), report.confusion, kind_display_name(kind));
    results.emplace_back(std::string(kind_display_name(kind)), report);
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.2f%%", 100.0 * report.accuracy);
    detail << (results.size() > 1 ? ", " : "") << name << "=" << acc;
  }
  write_metrics_csv(paths.metrics_csv(), results, config.averaging);
  return summary("evaluate", std::to_string(test.n_rows()) + " test rows; accuracy " + detail.str());
}

std::string run_pipeline(const PipelineConfig& config) {
  std::string log;
  if (config.manifest.empty()) log += run_synth(config) + "\n";
  log += run_ingest(config) + "\n";
  log += run_featurize(config) + "\n";
  log += run_select(config) + "\n";
  log += run_train(config) + "\n";
  log += run_evaluate(config);
  return log;
}

}  // namespace malclass
