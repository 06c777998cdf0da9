// Copyright 2026  The antispoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "manifest.h"

#include "antispoof/dataio.h"

namespace antispoof::cli {

std::string FileSha256(const std::filesystem::path& path) {
  return Sha256Hex(dataio::ReadFile(path));
}

Manifest::Manifest(std::string command, const Settings& settings,
                   const std::vector<std::string>& command_line) {
  doc_["command"] = std::move(command);
  doc_["command_line"] = command_line;
  doc_["seed"] = settings.GetU64("run.seed");
  doc_["deterministic"] = settings.GetBool("run.deterministic");
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [key, value] : settings.values()) {
    const auto dot = key.find('.');
    config[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  doc_["config"] = std::move(config);
  doc_["inputs"] = nlohmann::json::object();
  doc_["outputs"] = nlohmann::json::object();
}

void Manifest::AddInputFile(const std::string& name, const std::filesystem::path& path) {
  doc_["inputs"][name] = {{"path", path.string()}, {"sha256", FileSha256(path)}};
}

void Manifest::AddInputHash(const std::string& name, const std::string& sha256) {
  doc_["inputs"][name] = {{"sha256", sha256}};
}

void Manifest::AddOutputFile(const std::string& name, const std::filesystem::path& path) {
  doc_["outputs"][name] = {{"path", path.string()}, {"sha256", FileSha256(path)}};
}

void Manifest::Write(const std::filesystem::path& path) const {
  dataio::WriteFile(path, doc_.dump(2) + "\n");
}

nlohmann::json Manifest::Read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw InputError("run manifest not found: " + path.string());
  try {
    return nlohmann::json::parse(dataio::ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse run manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace antispoof::cli
