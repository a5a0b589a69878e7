#include "malclass/synth.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "malclass/error.hpp"
#include "malclass/parallel.hpp"
#include "malclass/rng.hpp"

namespace malclass {

using nlohmann::json;

void CorpusSpec::validate() const {
  if (profiles.size() != kNumClasses) throw Error(ErrorCode::InvalidSpec, "need exactly one profile per class");
  std::array<bool, kNumClasses> seen{};
  for (const auto& p : profiles) {
    if (seen[ordinal(p.label)]) throw Error(ErrorCode::InvalidSpec, "duplicate profile for a class");
    seen[ordinal(p.label)] = true;
    if (p.api_pool.empty()) throw Error(ErrorCode::InvalidSpec, "empty api pool");
    if (p.min_calls < 1 || p.min_calls > p.max_calls) throw Error(ErrorCode::InvalidSpec, "bad trace length range");
    if (!(p.noise_ratio >= 0.0 && p.noise_ratio < 1.0)) throw Error(ErrorCode::InvalidSpec, "noise_ratio outside [0,1)");
    if (p.noise_ratio > 0.0 && background_pool.empty())
      throw Error(ErrorCode::InvalidSpec, "noise requested without a background pool");
    for (const auto& api : p.api_pool) {
      if (!(api.weight > 0.0) || api.name.empty()) throw Error(ErrorCode::InvalidSpec, "api templates need a name and weight > 0");
    }
  }
  for (const auto& api : background_pool) {
    if (!(api.weight > 0.0) || api.name.empty()) throw Error(ErrorCode::InvalidSpec, "api templates need a name and weight > 0");
  }
  for (auto n : samples_per_class) {
    if (n < 2) throw Error(ErrorCode::InvalidSpec, "every class needs at least two samples");
  }
}

std::size_t CorpusSpec::total_samples() const {
  std::size_t n = 0;
  for (auto c : samples_per_class) n += c;
  return n;
}

namespace {

const ApiTemplate& pick(const std::vector<ApiTemplate>& pool, Rng& rng) {
  double total = 0.0;
  for (const auto& api : pool) total += api.weight;
  double u = rng.uniform() * total;
  for (const auto& api : pool) {
    if (u < api.weight) return api;
    u -= api.weight;
  }
  return pool.back();
}

std::vector<std::string_view> alternatives(std::string_view pattern) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto bar = pattern.find('|', start);
    out.push_back(pattern.substr(start, bar - start));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return out;
}

std::string expand(std::string_view text, Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.substr(i, 5) == "{hex}") {
      char buf[16];
      std::snprintf(buf, sizeof buf, "0x%08llx", static_cast<unsigned long long>(0x00400000 + 0x1000 * rng.below(0x4000)));
      out += buf;
      i += 5;
    } else if (text.substr(i, 5) == "{int}") {
      out += std::to_string(rng.below(65536));
      i += 5;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

json make_call(const ApiTemplate& api, Rng& rng) {
  std::size_t variants = 1;
  for (const auto& [_, pattern] : api.arguments) variants = std::max(variants, alternatives(pattern).size());
  const auto choice = static_cast<std::size_t>(rng.below(variants));
  json arguments = json::object();
  for (const auto& [key, pattern] : api.arguments) {
    const auto alts = alternatives(pattern);
    arguments[key] = expand(alts[choice % alts.size()], rng);
  }
  static constexpr const char* kReturns[] = {"0", "0", "0", "1", "0xc0000034"};
  return {{"category", api.category},
          {"api", api.name},
          {"arguments", std::move(arguments)},
          {"return_value", kReturns[rng.below(5)]},
          {"status", 1}};
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string generate_report(const ClassProfile& profile, const std::vector<ApiTemplate>& background,
                            const std::string& sample_id, std::uint64_t seed) {
  Rng rng(seed);
  const auto length = profile.min_calls + static_cast<std::size_t>(rng.below(profile.max_calls - profile.min_calls + 1));
  const auto n_processes = std::min<std::size_t>(length, 1 + static_cast<std::size_t>(rng.below(3)));

  // Cut points for the process boundaries.
  std::vector<std::size_t> cuts{0};
  for (std::size_t p = 1; p < n_processes; ++p) cuts.push_back(length * p / n_processes);
  cuts.push_back(length);

  json processes = json::array();
  for (std::size_t p = 0; p < n_processes; ++p) {
    json calls = json::array();
    for (std::size_t i = cuts[p]; i < cuts[p + 1]; ++i) {
      const bool noise = profile.noise_ratio > 0.0 && rng.uniform() < profile.noise_ratio;
      calls.push_back(make_call(pick(noise ? background : profile.api_pool, rng), rng));
    }
    processes.push_back({{"pid", 1000 + 4 * p},
                         {"process_name", p == 0 ? sample_id + ".exe" : "child" + std::to_string(p) + ".exe"},
                         {"calls", std::move(calls)}});
  }
  json report = {{"info", {{"package", "exe"}, {"machine", "cuckoo1"}}},
                 {"target", {{"category", "file"}, {"file", {{"name", sample_id + ".exe"}}}}},
                 {"behavior", {{"processes", std::move(processes)}}}};
  return report.dump(1);
}

ApiTemplate api(std::string name, std::string category, std::vector<std::pair<std::string, std::string>> args,
                double weight = 1.0) {
  return {std::move(name), std::move(category), std::move(args), weight};
}

std::vector<ApiTemplate> background_pool() {
  return {
      api("NtAllocateVirtualMemory", "process", {}, 3),
      api("NtAllocateVirtualMemory", "process", {{"base_address", "{hex}"}, {"region_size", "{int}"}}, 3),
      api("NtClose", "system", {{"handle", "{hex}"}}, 3),
      api("LdrLoadDll", "system", {{"basename", "kernel32|user32|ntdll|advapi32"}, {"filepath", "kernel32.dll|user32.dll|ntdll.dll|advapi32.dll"}}, 3),
      api("LdrGetProcedureAddress", "system", {{"dll_name", "kernel32"}, {"function_name", "GetProcAddress|LoadLibraryA|VirtualAlloc|ExitProcess"}}, 2),
      api("GetSystemTimeAsFileTime", "synchronisation", {}, 2),
      api("NtReadFile", "file", {{"file_handle", "{hex}"}, {"length", "{int}"}}, 2),
      api("RegOpenKeyExW", "registry", {{"regkey", "HKEY_LOCAL_MACHINE\\SOFTWARE\\Microsoft\\Windows NT\\CurrentVersion"}}, 1),
      api("NtQuerySystemInformation", "system", {{"information_class", "{int}"}}, 1),
      api("GetSystemMetrics", "misc", {{"index", "{int}"}}, 1),
  };
}

std::vector<ApiTemplate> class_pool(ClassLabel label) {
  switch (label) {
    case ClassLabel::Adware:
      return {
          api("LdrLoadDll", "system", {{"basename", "urlmon"}, {"filepath", "urlmon.dll"}}, 3),
          api("InternetOpenW", "network", {{"agent", "AdClient|PopupAgent"}, {"flags", "{int}"}}, 2),
          api("ShellExecuteExW", "process", {{"filepath", "iexplore.exe|chrome.exe"}, {"parameters", "ads.example.com|offers.example.net"}}, 2),
          api("CreateWindowExW", "ui", {{"class_name", "AdBanner"}, {"window_name", "Sponsored"}}, 2),
          api("RegSetValueExW", "registry", {{"buffer", "Toolbar|SearchHelper"}, {"key_handle", "{hex}"}}, 1),
          api("HttpSendRequestW", "network", {{"headers", "track.ads|impression"}, {"request_handle", "{hex}"}}, 1),
          api("FindWindowW", "ui", {{"class_name", "IEFrame"}, {"window_name", "Browser"}}, 1),
      };
    case ClassLabel::Backdoor:
      return {
          api("WSAStartup", "network", {}, 2),
          api("socket", "network", {{"af", "AF_INET"}, {"protocol", "IPPROTO_TCP"}}, 2),
          api("bind", "network", {{"ip_address", "any.local"}, {"port", "listener"}}, 2),
          api("listen", "network", {{"backlog", "pending"}, {"socket", "{hex}"}}, 1),
          api("accept", "network", {{"remote", "peer"}, {"socket", "{hex}"}}, 2),
          api("CreateProcessInternalW", "process", {{"command_line", "cmd.exe"}, {"creation_flags", "hidden"}}, 2),
          api("CreatePipe", "process", {{"pipe", "stdout|stdin"}, {"size", "default"}}, 1),
      };
    case ClassLabel::Downloader:
      return {
          api("URLDownloadToFileW", "network", {{"filepath", "update.exe|setup.tmp"}, {"url", "dl.example.org|cdn.example.org"}}, 3),
          api("LdrLoadDll", "system", {{"basename", "wininet"}, {"filepath", "wininet.dll"}}, 2),
          api("InternetOpenUrlA", "network", {{"flags", "reload"}, {"url", "dl.example.org|cdn.example.org"}}, 2),
          api("InternetReadFile", "network", {{"buffer", "payload"}, {"request_handle", "{hex}"}}, 2),
          api("CreateProcessInternalW", "process", {{"command_line", "update.exe"}, {"creation_flags", "normal"}}, 1),
          api("MoveFileWithProgressW", "file", {{"newfilepath", "svchost.exe"}, {"oldfilepath", "setup.tmp"}}, 1),
          api("DeleteFileW", "file", {{"filepath", "setup.tmp"}}, 1),
      };
    case ClassLabel::Spyware:
      return {
          api("SetWindowsHookExA", "hooking", {{"hook_identifier", "WH_KEYBOARD_LL|WH_MOUSE_LL"}, {"module_address", "{hex}"}}, 2),
          api("GetAsyncKeyState", "ui", {{"key_code", "VK_RETURN|VK_SHIFT|VK_TAB"}}, 3),
          api("GetClipboardData", "ui", {{"format", "CF_TEXT|CF_UNICODETEXT"}}, 2),
          api("LdrLoadDll", "system", {{"basename", "crypt"}, {"filepath", "crypt.dll"}}, 1),
          api("GetForegroundWindow", "ui", {}, 2),
          api("CryptUnprotectData", "crypto", {{"description", "browser.credentials"}, {"flags", "ui-forbidden"}}, 1),
          api("BitBlt", "ui", {{"dest", "capture"}, {"source", "screen"}}, 1),
      };
    case ClassLabel::Trojan:
      return {
          api("LdrGetProcedureAddress", "system", {{"dll_name", "ole32"}, {"function_name", "OleUninitialize|CoCreateInstance"}}, 3),
          api("LdrLoadDll", "system", {{"basename", "ole32|SETUPAPI"}, {"filepath", "ole32.dll|SETUPAPI.dll"}}, 2),
          api("LdrUnloadDll", "system", {{"basename", "SHELL32"}}, 2),
          api("NtProtectVirtualMemory", "process", {{"base_address", "{hex}"}, {"protection", "PAGE_EXECUTE_READWRITE"}}, 1),
          api("WriteProcessMemory", "process", {{"buffer", "shellcode"}, {"process_handle", "{hex}"}}, 1),
          api("CreateRemoteThread", "process", {{"function", "remote.entry"}, {"parameter", "injected"}}, 1),
          api("NtMapViewOfSection", "process", {{"allocation_type", "MEM_TOP_DOWN"}, {"section_handle", "{hex}"}}, 1),
      };
    case ClassLabel::Worm:
      return {
          api("NetShareEnum", "network", {{"level", "info"}, {"servername", "lan.share"}}, 2),
          api("GetDriveTypeW", "file", {{"root_path", "removable|network"}}, 2),
          api("CopyFileW", "file", {{"existing", "worm.exe"}, {"target", "autorun.inf|usb.exe"}}, 2),
          api("WNetOpenEnumW", "network", {{"scope", "RESOURCE_GLOBALNET"}, {"type", "RESOURCETYPE_DISK"}}, 1),
          api("gethostbyname", "network", {{"hostname", "peer.lan|smtp.relay"}}, 2),
          api("connect", "network", {{"ip_address", "peer.lan"}, {"socket", "{hex}"}}, 1),
          api("SetFileAttributesW", "file", {{"file_attributes", "hidden.system"}, {"filepath", "autorun.inf"}}, 1),
      };
    case ClassLabel::Virus:
      return {
          api("FindFirstFileExW", "file", {{"filepath", "*.exe|*.scr"}, {"info_level", "standard"}}, 3),
          api("FindNextFileW", "file", {{"filename", "host.exe|game.exe"}, {"handle", "{hex}"}}, 2),
          api("NtCreateFile", "file", {{"desired_access", "GENERIC_WRITE"}, {"filepath", "host.exe|game.exe"}}, 2),
          api("NtWriteFile", "file", {{"buffer", "viral.section"}, {"file_handle", "{hex}"}}, 2),
          api("SetFilePointer", "file", {{"move_method", "FILE_END"}, {"offset", "append"}}, 1),
          api("MapViewOfFile", "file", {{"access", "FILE_MAP_WRITE"}, {"mapping", "host.image"}}, 1),
          api("GetFileSize", "file", {{"file_handle", "{hex}"}}, 1),
      };
    case ClassLabel::Benign:
      return {
          api("CoInitializeEx", "com", {{"model", "COINIT_APARTMENTTHREADED"}}, 2),
          api("LoadStringW", "ui", {{"module", "app.resources"}, {"string_id", "caption|tooltip|menu"}}, 2),
          api("CreateWindowExW", "ui", {{"class_name", "MainWindow"}, {"window_name", "Application"}}, 2),
          api("LdrLoadDll", "system", {{"basename", "comctl"}, {"filepath", "comctl.dll"}}, 2),
          api("DrawTextW", "ui", {{"format", "DT_LEFT|DT_CENTER"}, {"text", "status|label"}}, 2),
          api("GetModuleFileNameW", "system", {{"filepath", "app.exe"}, {"module_handle", "self"}}, 1),
          api("MessageBoxW", "ui", {{"caption", "About"}, {"text", "Application"}}, 1),
      };
  }
  return {};
}

}  // namespace

std::vector<SyntheticSample> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  struct Job {
    const ClassProfile* profile;
    std::string sample_id;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto label = kAllLabels[c];
    const ClassProfile* profile = nullptr;
    for (const auto& p : spec.profiles) {
      if (p.label == label) profile = &p;
    }
    for (std::size_t i = 0; i < spec.samples_per_class[c]; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04zu", lower(label_name(label)).c_str(), i);
      jobs.push_back({profile, id});
    }
  }
  std::vector<SyntheticSample> samples(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& job = jobs[i];
    samples[i] = {job.sample_id, generate_report(*job.profile, spec.background_pool, job.sample_id, derive_seed(spec.seed, i)),
                  job.profile->label};
  });
  return samples;
}

CorpusScale parse_scale(std::string_view name) {
  if (name == "tiny") return CorpusScale::Tiny;
  if (name == "desk") return CorpusScale::Desk;
  throw Error(ErrorCode::ConfigError, "unknown corpus scale '" + std::string(name) + "' (expected tiny or desk)");
}

CorpusSpec default_spec(CorpusScale scale, std::uint64_t seed) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.background_pool = background_pool();
  const std::size_t per_class = scale == CorpusScale::Tiny ? 20 : 100;
  spec.samples_per_class.fill(per_class);
  for (auto label : kAllLabels) {
    ClassProfile profile;
    profile.label = label;
    profile.api_pool = class_pool(label);
    profile.min_calls = scale == CorpusScale::Tiny ? 30 : 60;
    profile.max_calls = scale == CorpusScale::Tiny ? 80 : 160;
    profile.noise_ratio = 0.3;
    spec.profiles.push_back(std::move(profile));
  }
  return spec;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<SyntheticSample>& samples) {
  const auto report_dir = dir / "reports";
  std::filesystem::create_directories(report_dir);
  std::vector<ManifestEntry> entries;
  entries.reserve(samples.size());
  for (const auto& s : samples) {
    const auto relative = std::filesystem::path("reports") / (s.sample_id + ".json");
    std::ofstream out(dir / relative, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (dir / relative).string());
    out << s.json << '\n';
    entries.push_back({s.sample_id, s.label, relative});
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace malclass
