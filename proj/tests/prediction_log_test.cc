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

#include "doctest.h"
#include "kdbias/common.h"
#include "kdbias/io.h"
#include "kdbias/prediction_log.h"

using namespace kdbias;

TEST_CASE("well-formed log") {
  const std::string text =
      "# model=nds_seed1\n# split=test\nexample_id,true_label,predicted_label,attr_color\n"
      "1,0,0,1\n2,1,0,0\n3,2,2,1\n";
  const auto log = parse_prediction_log(text, 3);
  CHECK(log.size() == 3);
  CHECK(log.model == "nds_seed1");
  CHECK(log.attribute_names == std::vector<std::string>{"color"});
  CHECK(log.records[1].predicted_label == 0);
  CHECK(log.records[2].attributes == std::vector<int>{1});
  CHECK(parse_prediction_log(format_prediction_log(log), 3).records[2].example_id == 3);
}

TEST_CASE("columns may come in any order") {
  const auto log = parse_prediction_log("attr_g,predicted_label,example_id,true_label\n4,1,7,0\n", 2);
  CHECK(log.records[0].example_id == 7);
  CHECK(log.records[0].attributes[0] == 4);
}

TEST_CASE("schema errors") {
  const std::string head = "example_id,true_label,predicted_label,attr_a\n";
  CHECK_THROWS_WITH_AS(parse_prediction_log(head + "1,0,0,0\n2,1,3,0\n", 3),
                       doctest::Contains("row 2"), SchemaError);
  CHECK_THROWS_WITH_AS(parse_prediction_log(head + "1,0,3,0\n", 3),
                       doctest::Contains("predicted_label 3"), SchemaError);
  CHECK_THROWS_WITH_AS(parse_prediction_log("example_id,true_label,predicted_label,score\n1,0,0,9\n", 3),
                       doctest::Contains("score"), SchemaError);
  CHECK_THROWS_WITH_AS(parse_prediction_log(head + "1,0,0,0\n1,1,1,0\n", 3),
                       doctest::Contains("duplicate example_id"), SchemaError);
  CHECK_THROWS_AS(parse_prediction_log(head + "1,0,x,0\n", 3), SchemaError);
  CHECK_THROWS_AS(parse_prediction_log(head + "1,0,0\n", 3), SchemaError);
  CHECK_THROWS_AS(parse_prediction_log(head + "1,0,0,-1\n", 3), SchemaError);
  CHECK_THROWS_AS(parse_prediction_log(head + "1,-1,0,0\n", 3), SchemaError);
  CHECK_THROWS_AS(parse_prediction_log("example_id,predicted_label\n1,0\n", 3), SchemaError);
  CHECK_THROWS_AS(parse_prediction_log("example_id,true_label,true_label,predicted_label\n", 3),
                  SchemaError);
  CHECK_THROWS_AS(parse_prediction_log("", 3), SchemaError);
}

TEST_CASE("load names the file") {
  const auto path = std::filesystem::temp_directory_path() / "kdbias_test_log.csv";
  io::write_file_atomic(path, "example_id,true_label,predicted_label\n1,0,5\n");
  CHECK_THROWS_WITH_AS(load_prediction_log(path, 2), doctest::Contains("kdbias_test_log.csv"),
                       SchemaError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_prediction_log(path, 2), MissingArtifactError);
}
