/*
 * Copyright 2026 the mtforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtforge/cleaning.hpp"
#include "mtforge/common.hpp"

namespace mtforge {

// Embeddings served by a child process speaking line JSON over stdio:
// each request is {"id": N, "text": ...}\n on its stdin and each response
// {"id": N, "vector": [...]}\n on its stdout, one response per request, in
// order, flushed per line. Any protocol violation fails the current record
// only; the pipeline routes it to the error channel.
class SubprocessEmbeddings final : public EmbeddingProvider {
 public:
  explicit SubprocessEmbeddings(const std::string& command) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw ConfigError("embedding subprocess: pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw ConfigError("embedding subprocess: fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = fdopen(from_child[0], "r");
    out_ = fdopen(to_child[1], "w");
    if (!in_ || !out_) throw ConfigError("embedding subprocess: fdopen() failed");
  }

  SubprocessEmbeddings(const SubprocessEmbeddings&) = delete;
  SubprocessEmbeddings& operator=(const SubprocessEmbeddings&) = delete;

  ~SubprocessEmbeddings() override {
    if (out_) fclose(out_);  // EOF lets the child exit
    if (in_) fclose(in_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  std::optional<std::vector<float>> embed(std::string_view text) override {
    if (!out_ || !in_) return std::nullopt;
    uint64_t id = next_id_++;
    nlohmann::json req{{"id", id}, {"text", std::string(text)}};
    std::string line = req.dump();
    line.push_back('\n');
    if (std::fwrite(line.data(), 1, line.size(), out_) != line.size()) return std::nullopt;
    if (std::fflush(out_) != 0) return std::nullopt;

    std::string resp;
    if (!read_line(resp)) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(resp, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("vector")) return std::nullopt;
    if (j["id"].get<uint64_t>() != id) return std::nullopt;
    if (!j["vector"].is_array()) return std::nullopt;
    return j["vector"].get<std::vector<float>>();
  }

 private:
  bool read_line(std::string& out) {
    out.clear();
    int c;
    while ((c = std::fgetc(in_)) != EOF) {
      if (c == '\n') return true;
      out.push_back(char(c));
    }
    return false;
  }

  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
  uint64_t next_id_ = 1;
};

}  // namespace mtforge
