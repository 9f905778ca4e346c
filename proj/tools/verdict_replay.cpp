// Recomputes the retained set of a verified batch from its verdict log alone
// and compares it with the retained file the pipeline wrote.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

using nlohmann::json;

const std::vector<std::string> kFilters = {"SourceConsistency", "VisualDependenceText", "VisualDependenceVision",
                                           "VisionConsistency"};

std::vector<json> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) continue;  // torn tail after a crash
    out.push_back(record);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: verdict_replay <batch-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  try {
    std::map<std::string, std::map<std::string, bool>> verdicts;
    for (const json& v : read_lines(dir / "verdicts.jsonl")) {
      verdicts[v.at("candidate").get<std::string>()][v.at("filter").get<std::string>()] = v.at("passed").get<bool>();
    }
    std::set<std::string> deferred;
    std::ifstream manifest_in(dir / "verify.manifest.json");
    if (manifest_in) {
      const json manifest = json::parse(manifest_in);
      for (const json& key : manifest.value("deferred", json::array())) deferred.insert(key.get<std::string>());
    }
    std::set<std::string> written;
    for (const json& r : read_lines(dir / "retained.jsonl")) written.insert(r.at("key").get<std::string>());

    int problems = 0;
    std::size_t candidates = 0, expected_retained = 0;
    for (const json& c : read_lines(dir / "candidates.jsonl")) {
      const std::string key = c.at("key").get<std::string>();
      ++candidates;
      if (deferred.count(key)) {
        if (written.count(key)) {
          std::cout << "MISMATCH " << key << ": deferred but retained\n";
          ++problems;
        }
        continue;
      }
      const auto& found = verdicts[key];
      bool all_passed = true;
      bool failed_seen = false;
      for (const std::string& filter : kFilters) {
        const auto it = found.find(filter);
        if (failed_seen) {
          if (it != found.end()) {
            std::cout << "MISMATCH " << key << ": verdict for " << filter << " after a failed filter\n";
            ++problems;
          }
          continue;
        }
        if (it == found.end()) {
          std::cout << "MISMATCH " << key << ": no verdict for " << filter << "\n";
          ++problems;
          all_passed = false;
          break;
        }
        if (!it->second) {
          all_passed = false;
          failed_seen = true;
        }
      }
      if (all_passed) ++expected_retained;
      if (all_passed != (written.count(key) > 0)) {
        std::cout << "MISMATCH " << key << ": verdicts say " << (all_passed ? "retain" : "reject")
                  << ", retained file disagrees\n";
        ++problems;
      }
    }
    std::cout << (problems == 0 ? "OK" : "FAIL") << " candidates=" << candidates << " retained=" << expected_retained
              << " deferred=" << deferred.size() << " problems=" << problems << '\n';
    return problems == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "verdict_replay: " << e.what() << '\n';
    return 2;
  }
}
