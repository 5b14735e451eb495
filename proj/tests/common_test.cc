/*
 * Copyright 2026 The kdbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <set>

#include "doctest.h"
#include "kdbias/common.h"
#include "kdbias/io.h"

using namespace kdbias;

TEST_CASE("rng streams") {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.uniform_int(7) < 7);
  }
  std::vector<int> v = {1, 2, 3, 4, 5, 6};
  Rng s(2);
  s.shuffle(v);
  CHECK(std::multiset<int>(v.begin(), v.end()) == std::multiset<int>{1, 2, 3, 4, 5, 6});
  CHECK(derive_seed(1, "init") != derive_seed(1, "shuffle"));
  CHECK(derive_seed(1, "init") == derive_seed(1, "init"));
  CHECK(derive_seed(1, "init") != derive_seed(2, "init"));
}

TEST_CASE("fnv1a known values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("number formatting") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0 / 3) == "0.3333333333333333");
  CHECK(io::format_double(5) == "5");
  CHECK(io::format_fixed(9.4149, 2) == "9.41");
  CHECK(io::format_fixed(-0.001, 2) == "0.00");
  CHECK(io::format_fixed(NAN, 2) == "NA");
  double v = 0;
  CHECK(io::parse_double("2.5e-3", &v));
  CHECK(v == 0.0025);
  CHECK_FALSE(io::parse_double("2.5x", &v));
  int64_t n = 0;
  CHECK(io::parse_int64("+42", &n));
  CHECK(n == 42);
  CHECK_FALSE(io::parse_int64("4.2", &n));
  CHECK_FALSE(io::parse_int64("", &n));
}

TEST_CASE("atomic writes leave no temp files") {
  const auto dir = std::filesystem::temp_directory_path() / "kdbias_test_atomic";
  std::filesystem::remove_all(dir);
  io::write_file_atomic(dir / "a" / "f.txt", "one");
  io::write_file_atomic(dir / "a" / "f.txt", "two");
  CHECK(io::read_file(dir / "a" / "f.txt") == "two");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "a")) files += e.is_regular_file();
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("commented csv") {
  const auto csv = io::parse_commented_csv("# a=1\n# b=x=y\nh1,h2\n1,2\n\n3,4\n");
  CHECK(csv.metadata.size() == 2);
  CHECK(csv.metadata[1].second == "x=y");
  CHECK(csv.header.size() == 2);
  CHECK(csv.rows.size() == 2);
  CHECK(csv.rows[1].first == 6);
  CHECK_THROWS_AS(io::parse_commented_csv("# only=meta\n"), SchemaError);
}
