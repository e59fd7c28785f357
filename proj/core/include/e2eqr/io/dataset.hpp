// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "e2eqr/docgraph/document_graph.hpp"

namespace e2eqr::io {

using Json = nlohmann::ordered_json;

struct DocumentRecord {
  std::string title;
  std::string text;
  bool is_answer_doc = false;
  std::vector<std::string> entities;
};

/// One line of a dataset file. `order` and `bridges` are present once the
/// record has been arranged; reference intermediates are evaluation-only.
struct DatasetRecord {
  std::string id;
  std::size_t hops = 0;
  std::string answer;
  std::string question;
  std::vector<DocumentRecord> documents;
  std::optional<std::vector<std::string>> reference_intermediates;
  std::optional<std::vector<std::size_t>> order;
  std::optional<std::vector<std::vector<std::string>>> bridges;
};

Json to_json(const DatasetRecord& record);
/// DataError naming the record id (when readable) on malformed input.
DatasetRecord record_from_json(const Json& j);

std::vector<docgraph::Document> to_documents(const DatasetRecord& record);

/// Arranges the record in place (order + bridges).
void arrange_record(DatasetRecord& record);

/// Uses the stored arrangement when present, otherwise arranges. Checks that
/// the document count equals hops.
docgraph::ArrangedExample to_arranged(const DatasetRecord& record);

/// Calls `fn(line_number, json)` for each nonempty line. Parse errors are
/// reported through DataError with the line number.
void for_each_jsonl(const std::filesystem::path& path, const std::function<void(std::size_t, const Json&)>& fn);

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& lines);

}  // namespace e2eqr::io
