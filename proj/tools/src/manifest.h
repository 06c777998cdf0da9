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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "settings.h"

namespace antispoof::cli {

// Run manifest written next to every command's outputs: the command line,
// the full configuration snapshot, the seed and content hashes of the
// inputs, which together are enough to rerun the command. Manifests carry no
// timestamps so that reruns produce identical files.
class Manifest {
 public:
  Manifest(std::string command, const Settings& settings,
           const std::vector<std::string>& command_line);

  // SHA-256 of a file's bytes, recorded under `name`.
  void AddInputFile(const std::string& name, const std::filesystem::path& path);
  void AddInputHash(const std::string& name, const std::string& sha256);
  void AddOutputFile(const std::string& name, const std::filesystem::path& path);

  nlohmann::json& operator[](const std::string& key) { return doc_[key]; }
  const nlohmann::json& json() const { return doc_; }

  void Write(const std::filesystem::path& path) const;
  static nlohmann::json Read(const std::filesystem::path& path);

 private:
  nlohmann::json doc_;
};

std::string FileSha256(const std::filesystem::path& path);

}  // namespace antispoof::cli
