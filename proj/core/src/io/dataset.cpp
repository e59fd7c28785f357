// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/io/dataset.hpp"

#include <fstream>

#include "e2eqr/errors.hpp"

namespace e2eqr::io {

Json to_json(const DatasetRecord& r) {
  Json j;
  j["id"] = r.id;
  j["hops"] = r.hops;
  j["answer"] = r.answer;
  j["question"] = r.question;
  Json docs = Json::array();
  for (const auto& d : r.documents) {
    docs.push_back(Json{{"title", d.title}, {"text", d.text}, {"is_answer_doc", d.is_answer_doc}, {"entities", d.entities}});
  }
  j["documents"] = std::move(docs);
  if (r.reference_intermediates) j["reference_intermediates"] = *r.reference_intermediates;
  if (r.order) j["order"] = *r.order;
  if (r.bridges) j["bridges"] = *r.bridges;
  return j;
}

DatasetRecord record_from_json(const Json& j) {
  DatasetRecord r;
  try {
    if (!j.is_object()) throw DataError("record is not an object");
    r.id = j.at("id").get<std::string>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("record without a readable id: ") + e.what());
  }
  try {
    r.hops = j.at("hops").get<std::size_t>();
    r.answer = j.at("answer").get<std::string>();
    r.question = j.value("question", std::string{});
    for (const auto& d : j.at("documents")) {
      DocumentRecord doc;
      doc.title = d.at("title").get<std::string>();
      doc.text = d.at("text").get<std::string>();
      doc.is_answer_doc = d.value("is_answer_doc", false);
      if (d.contains("entities")) doc.entities = d.at("entities").get<std::vector<std::string>>();
      r.documents.push_back(std::move(doc));
    }
    if (j.contains("reference_intermediates")) {
      r.reference_intermediates = j.at("reference_intermediates").get<std::vector<std::string>>();
    }
    if (j.contains("order")) r.order = j.at("order").get<std::vector<std::size_t>>();
    if (j.contains("bridges")) r.bridges = j.at("bridges").get<std::vector<std::vector<std::string>>>();
  } catch (const Json::exception& e) {
    throw DataError("record " + r.id + ": " + e.what());
  }
  if (r.documents.empty()) throw DataError("record " + r.id + ": no documents");
  return r;
}

std::vector<docgraph::Document> to_documents(const DatasetRecord& r) {
  std::vector<docgraph::Document> docs;
  for (std::size_t i = 0; i < r.documents.size(); ++i) {
    const auto& d = r.documents[i];
    docs.push_back({i, split_whitespace(d.title), split_whitespace(d.text), d.is_answer_doc, d.entities});
  }
  return docs;
}

void arrange_record(DatasetRecord& r) {
  const auto docs = to_documents(r);
  const auto a = docgraph::arrange(docs);
  r.order = a.order;
  std::vector<std::vector<std::string>> bridges;
  for (const auto& b : a.bridges) bridges.emplace_back(b.begin(), b.end());
  r.bridges = std::move(bridges);
}

docgraph::ArrangedExample to_arranged(const DatasetRecord& r) {
  if (r.documents.size() != r.hops) {
    throw DataError("record " + r.id + ": " + std::to_string(r.documents.size()) + " documents but hops = " +
                    std::to_string(r.hops));
  }
  const auto docs = to_documents(r);
  if (!r.order) {
    try {
      return docgraph::make_arranged(r.id, split_whitespace(r.answer), docs, split_whitespace(r.question));
    } catch (const ContractError& e) {
      throw DataError("record " + r.id + ": " + e.what());
    } catch (const ArrangementError& e) {
      throw DataError("record " + r.id + ": " + e.what());
    }
  }
  const auto& order = *r.order;
  if (order.size() != docs.size() || !r.bridges || r.bridges->size() + 1 != docs.size()) {
    throw DataError("record " + r.id + ": arrangement does not match its documents");
  }
  docgraph::ArrangedExample ex;
  ex.id = r.id;
  ex.answer = split_whitespace(r.answer);
  ex.gold_question = split_whitespace(r.question);
  ex.hops = r.hops;
  std::vector<bool> seen(docs.size(), false);
  for (auto i : order) {
    if (i >= docs.size() || seen[i]) throw DataError("record " + r.id + ": invalid document order");
    seen[i] = true;
    ex.documents.push_back(docs[i]);
  }
  if (!ex.documents.front().is_answer_doc) throw DataError("record " + r.id + ": order must start at the answer document");
  for (const auto& b : *r.bridges) ex.bridges.emplace_back(b.begin(), b.end());
  return ex;
}

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    fn(n, j);
  }
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  for_each_jsonl(path, [&](std::size_t, const Json& j) { out.push_back(record_from_json(j)); });
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& j : lines) out << j.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::vector<Json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json(r));
  write_jsonl(path, lines);
}

}  // namespace e2eqr::io
