// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "scan/deptree.hpp"

namespace scan::fixtures {

/// "girl in green sitting on": girl <- {in, sitting}, in <- green, sitting <- on.
inline constexpr const char* kGirlConllu =
    "# text = girl in green sitting on\n"
    "1\tgirl\tgirl\tNOUN\t_\t_\t0\troot\t_\t_\n"
    "2\tin\tin\tADP\t_\t_\t1\tnmod\t_\t_\n"
    "3\tgreen\tgreen\tADJ\t_\t_\t2\tamod\t_\t_\n"
    "4\tsitting\tsit\tVERB\t_\t_\t1\tacl\t_\t_\n"
    "5\ton\ton\tADP\t_\t_\t4\tcompound:prt\t_\t_\n"
    "\n";

inline DependencyTree girl_tree() { return parse_conllu(kGirlConllu).front(); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scanqa_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name, std::ios::binary) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

}  // namespace scan::fixtures
