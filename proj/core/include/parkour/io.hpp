/*
Copyright 2026 the parkourlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "parkour/common.hpp"

namespace parkour::io {

// Little-endian binary stream helpers. The formats written here are
// bit-exact round-trip by construction (raw IEEE-754 doubles).

class BinWriter {
 public:
  explicit BinWriter(const std::string& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw ConfigError("cannot open for writing: " + path);
  }

  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void vec(const VecXd& v) {
    u32(static_cast<uint32_t>(v.size()));
    raw(v.data(), sizeof(double) * v.size());
  }
  void mat(const MatXd& m) {
    u32(static_cast<uint32_t>(m.rows()));
    u32(static_cast<uint32_t>(m.cols()));
    raw(m.data(), sizeof(double) * m.size());
  }
  void raw(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw ConfigError("cannot open for reading: " + path);
  }

  uint8_t u8() { return get<uint8_t>(); }
  uint32_t u32() { return get<uint32_t>(); }
  uint64_t u64() { return get<uint64_t>(); }
  int64_t i64() { return get<int64_t>(); }
  double f64() { return get<double>(); }
  std::string str() {
    const uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  VecXd vec() {
    const uint32_t n = u32();
    VecXd v(n);
    raw(v.data(), sizeof(double) * n);
    return v;
  }
  MatXd mat() {
    const uint32_t r = u32();
    const uint32_t c = u32();
    MatXd m(r, c);
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }
  void raw(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw ConfigError("truncated file: " + path_);
  }

 private:
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace parkour::io
