#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "malclass/labels.hpp"

namespace malclass {

/// One API invocation as recorded by the sandbox.
struct ApiCallRecord {
  std::string category;
  std::string name;
  std::vector<std::string> arguments;
  std::string return_value;

  bool operator==(const ApiCallRecord&) const = default;
};

struct BehaviorReport {
  std::string sample_id;
  ClassLabel label = ClassLabel::Benign;
  std::vector<ApiCallRecord> calls;
  /// Index into `calls` where each process's trace begins (first entry is 0 when non-empty).
  std::vector<std::size_t> process_starts;

  bool operator==(const BehaviorReport&) const = default;
};

/// Parses a Cuckoo 2.x style report (behavior -> processes[] -> calls[]).
///
/// Keys are matched case-insensitively and unknown keys are ignored. Processes are
/// concatenated in report order. Named arguments (a JSON object) are flattened to their
/// values in lexicographic key order; non-string scalars are stringified and null becomes
/// "na".
///
/// Throws Error(MalformedJson), Error(MissingBehaviorSection) or Error(EmptyTrace).
BehaviorReport parse_report(std::string_view raw, ClassLabel label, std::string sample_id);

/// The four index-aligned element streams of a trace.
struct ElementStreams {
  std::vector<std::string> categories;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> arguments;
  std::vector<std::string> returns;
};

ElementStreams partition_elements(const BehaviorReport& report);

/// Writes <id>.category.txt, <id>.name.txt, <id>.argument.txt and <id>.return.txt, one
/// call per line; argument lists are joined with a tab.
void write_element_files(const ElementStreams& streams, const std::filesystem::path& dir,
                         const std::string& sample_id);

nlohmann::json to_normalized_json(const BehaviorReport& report);
/// Throws Error(MalformedJson) on schema violations.
BehaviorReport from_normalized_json(const nlohmann::json& j);

struct ManifestEntry {
  std::string sample_id;
  ClassLabel label = ClassLabel::Benign;
  std::filesystem::path path;
};

/// CSV with header sample_id,label,path. Relative paths resolve against the manifest's
/// directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace malclass
