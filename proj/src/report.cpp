#include "malclass/report.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"

namespace malclass {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const json* find_key(const json& object, std::initializer_list<std::string_view> candidates) {
  if (!object.is_object()) return nullptr;
  for (auto candidate : candidates) {
    for (auto it = object.begin(); it != object.end(); ++it) {
      if (lower(it.key()) == candidate) return &it.value();
    }
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

std::string stringify(const json& value) {
  switch (value.type()) {
    case json::value_t::string: return value.get<std::string>();
    case json::value_t::null: return "na";
    case json::value_t::boolean: return value.get<bool>() ? "true" : "false";
    default: return value.dump();
  }
}

ApiCallRecord parse_call(const json& call) {
  if (!call.is_object()) throw Error(ErrorCode::MalformedJson, "call entry is not an object");
  ApiCallRecord record;
  const json* name = find_key(call, {"api", "api_name", "name"});
  if (name == nullptr || !name->is_string())
    throw Error(ErrorCode::MalformedJson, "call without API name");
  record.name = trim(name->get<std::string>());
  if (record.name.empty()) throw Error(ErrorCode::MalformedJson, "call with empty API name");

  if (const json* category = find_key(call, {"category"}); category != nullptr && !category->is_null())
    record.category = stringify(*category);
  if (const json* ret = find_key(call, {"return_value", "return", "retval"}); ret != nullptr)
    record.return_value = stringify(*ret);

  if (const json* args = find_key(call, {"arguments", "args"}); args != nullptr) {
    if (args->is_object()) {
      // nlohmann::json objects iterate in lexicographic key order.
      for (auto it = args->begin(); it != args->end(); ++it) record.arguments.push_back(stringify(it.value()));
    } else if (args->is_array()) {
      for (const auto& v : *args) record.arguments.push_back(stringify(v));
    } else if (!args->is_null()) {
      record.arguments.push_back(stringify(*args));
    }
  }
  return record;
}

}  // namespace

BehaviorReport parse_report(std::string_view raw, ClassLabel label, std::string sample_id) {
  json doc = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedJson, "undecodable report for " + sample_id);

  const json* behavior = find_key(doc, {"behavior"});
  if (behavior == nullptr || !behavior->is_object())
    throw Error(ErrorCode::MissingBehaviorSection, "no behavior section in " + sample_id);

  std::vector<const json*> call_lists;
  bool has_trace = false;
  if (const json* processes = find_key(*behavior, {"processes"}); processes != nullptr && processes->is_array()) {
    has_trace = true;
    for (const auto& process : *processes) {
      const json* calls = find_key(process, {"calls"});
      if (calls != nullptr && calls->is_array()) call_lists.push_back(calls);
    }
  } else if (const json* calls = find_key(*behavior, {"calls"}); calls != nullptr && calls->is_array()) {
    has_trace = true;
    call_lists.push_back(calls);
  }
  if (!has_trace) throw Error(ErrorCode::MissingBehaviorSection, "no call list in " + sample_id);

  BehaviorReport report;
  report.sample_id = std::move(sample_id);
  report.label = label;
  for (const json* calls : call_lists) {
    if (calls->empty()) continue;
    report.process_starts.push_back(report.calls.size());
    for (const auto& call : *calls) report.calls.push_back(parse_call(call));
  }
  if (report.calls.empty()) throw Error(ErrorCode::EmptyTrace, "zero API calls in " + report.sample_id);
  return report;
}

ElementStreams partition_elements(const BehaviorReport& report) {
  ElementStreams streams;
  const auto n = report.calls.size();
  streams.categories.reserve(n);
  streams.names.reserve(n);
  streams.arguments.reserve(n);
  streams.returns.reserve(n);
  for (const auto& call : report.calls) {
    streams.categories.push_back(call.category);
    streams.names.push_back(call.name);
    streams.arguments.push_back(call.arguments);
    streams.returns.push_back(call.return_value);
  }
  return streams;
}

void write_element_files(const ElementStreams& streams, const std::filesystem::path& dir,
                         const std::string& sample_id) {
  std::filesystem::create_directories(dir);
  auto write_lines = [&](const std::string& suffix, auto&& line_of, std::size_t count) {
    const auto path = dir / (sample_id + suffix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    for (std::size_t i = 0; i < count; ++i) out << line_of(i) << '\n';
  };
  const auto n = streams.names.size();
  write_lines(".category.txt", [&](std::size_t i) { return streams.categories[i]; }, n);
  write_lines(".name.txt", [&](std::size_t i) { return streams.names[i]; }, n);
  write_lines(".argument.txt", [&](std::size_t i) {
    std::string line;
    for (std::size_t a = 0; a < streams.arguments[i].size(); ++a) {
      if (a) line.push_back('\t');
      line += streams.arguments[i][a];
    }
    return line;
  }, n);
  write_lines(".return.txt", [&](std::size_t i) { return streams.returns[i]; }, n);
}

json to_normalized_json(const BehaviorReport& report) {
  json calls = json::array();
  for (const auto& call : report.calls) {
    calls.push_back({{"category", call.category},
                     {"name", call.name},
                     {"arguments", call.arguments},
                     {"return_value", call.return_value}});
  }
  return {{"sample_id", report.sample_id},
          {"label", std::string(label_name(report.label))},
          {"process_starts", report.process_starts},
          {"calls", std::move(calls)}};
}

BehaviorReport from_normalized_json(const json& j) {
  try {
    BehaviorReport report;
    report.sample_id = j.at("sample_id").get<std::string>();
    const auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw Error(ErrorCode::MalformedJson, "unknown label in normalized report");
    report.label = *label;
    report.process_starts = j.at("process_starts").get<std::vector<std::size_t>>();
    for (const auto& c : j.at("calls")) {
      report.calls.push_back({c.at("category").get<std::string>(), c.at("name").get<std::string>(),
                              c.at("arguments").get<std::vector<std::string>>(),
                              c.at("return_value").get<std::string>()});
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("normalized report: ") + e.what());
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  const auto table = csv::read_file(manifest, {"sample_id", "label", "path"});
  const auto base = manifest.parent_path();
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    if (row.size() != 3) throw Error(ErrorCode::IoFailure, "manifest row with " + std::to_string(row.size()) + " fields");
    const auto label = parse_label(row[1]);
    if (!label) throw Error(ErrorCode::IoFailure, "unknown label '" + row[1] + "' in manifest");
    if (!seen.insert(row[0]).second) throw Error(ErrorCode::IoFailure, "duplicate sample_id " + row[0]);
    std::filesystem::path path(row[2]);
    if (path.is_relative()) path = base / path;
    entries.push_back({row[0], *label, path});
  }
  return entries;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries) {
  std::vector<csv::Row> rows;
  rows.reserve(entries.size());
  for (const auto& e : entries) rows.push_back({e.sample_id, std::string(label_name(e.label)), e.path.generic_string()});
  csv::write_file(manifest, {"sample_id", "label", "path"}, rows);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, "missing file " + path.string());
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace malclass
