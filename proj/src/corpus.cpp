#include "sizesym/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sizesym/error.hpp"

namespace sizesym {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

void put_le(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string_view to_string(SizeLabel label) { return label == SizeLabel::large ? "large" : "small"; }

SizeLabel parse_size_label(std::string_view text) {
  if (text == "small") return SizeLabel::small;
  if (text == "large") return SizeLabel::large;
  throw DataError("unknown size label '" + std::string(text) + "' (expected small or large)");
}

Lexicon::Lexicon(std::vector<WordEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    auto [it, inserted] = families_.emplace(e.language, e.family);
    if (!inserted && it->second != e.family) {
      throw DataError("language '" + e.language + "' assigned to families '" + it->second + "' and '" +
                      e.family + "'");
    }
    counts_[e.language][static_cast<int>(e.size)] += 1;
  }
  for (const auto& [lang, c] : counts_) {
    if (c[0] != 15 || c[1] != 15) {
      warnings_.push_back("language '" + lang + "' has " + std::to_string(c[0]) + " small / " +
                          std::to_string(c[1]) + " large entries (expected 15/15)");
    }
  }
}

std::vector<std::string> Lexicon::languages() const {
  std::vector<std::string> out;
  for (const auto& [lang, fam] : families_) out.push_back(lang);
  return out;
}

const std::string& Lexicon::family_of(const std::string& language) const {
  auto it = families_.find(language);
  if (it == families_.end()) throw DataError("unknown language '" + language + "'");
  return it->second;
}

std::vector<WordEntry> Lexicon::entries_for(const std::string& language) const {
  std::vector<WordEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [&](const WordEntry& e) { return e.language == language; });
  return out;
}

void Lexicon::require_trainable(const std::string& language) const {
  auto it = counts_.find(language);
  if (it == counts_.end() || it->second[0] < 2 || it->second[1] < 2) {
    throw DataError("language '" + language + "' needs at least 2 small and 2 large entries for training");
  }
}

Lexicon load_lexicon(const std::string& path, LexiconFormat format, const TokenizerRules& rules) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon '" + path + "'");
  const char delim = format == LexiconFormat::tsv ? '\t' : ',';

  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++row;
    chomp(line);
    if (blank(line)) continue;
    header = split(line, delim);
  }
  if (header.empty()) throw RowError(path, 1, "empty file (missing header row)");

  const std::array<std::string, 5> required{"language", "family", "lemma", "ipa", "size"};
  std::array<std::size_t, 5> column{};
  for (std::size_t k = 0; k < required.size(); ++k) {
    auto it = std::find(header.begin(), header.end(), required[k]);
    if (it == header.end()) throw RowError(path, row, "missing column '" + required[k] + "'");
    column[k] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<WordEntry> entries;
  std::map<std::string, std::string> families;
  while (std::getline(in, line)) {
    ++row;
    chomp(line);
    if (blank(line)) continue;
    const auto fields = split(line, delim);
    if (fields.size() != header.size()) {
      throw RowError(path, row, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    WordEntry e;
    e.language = fields[column[0]];
    e.family = fields[column[1]];
    e.lemma = fields[column[2]];
    e.ipa = fields[column[3]];
    if (e.language.empty()) throw RowError(path, row, "empty language id");
    try {
      e.size = parse_size_label(fields[column[4]]);
    } catch (const DataError& err) {
      throw RowError(path, row, err.what());
    }
    try {
      if (tokenize(e.ipa, rules).empty()) throw DataError("IPA form '" + e.ipa + "' has no segments");
    } catch (const DataError& err) {
      throw RowError(path, row, err.what());
    }
    auto [it, inserted] = families.emplace(e.language, e.family);
    if (!inserted && it->second != e.family) {
      throw RowError(path, row, "language '" + e.language + "' previously assigned to family '" + it->second + "'");
    }
    entries.push_back(std::move(e));
  }
  return Lexicon(std::move(entries));
}

void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  std::ostringstream out;
  out << "language\tfamily\tlemma\tipa\tsize\n";
  for (const auto& e : lexicon.entries()) {
    out << e.language << '\t' << e.family << '\t' << e.lemma << '\t' << e.ipa << '\t' << to_string(e.size) << '\n';
  }
  write_file_atomic(path, out.str());
}

PretrainCorpus load_pretrain_corpus(const std::string& path, const TokenizerRules& rules) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pretraining corpus '" + path + "'");
  PretrainCorpus corpus;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    chomp(line);
    if (blank(line)) continue;
    PretrainItem item;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      item.ipa = line;
    } else {
      item.language = line.substr(0, tab);
      item.ipa = line.substr(tab + 1);
    }
    try {
      if (tokenize(item.ipa, rules).empty()) throw DataError("no segments");
    } catch (const DataError& err) {
      ++corpus.skipped;
      corpus.warnings.push_back(path + ":" + std::to_string(row) + ": skipped: " + err.what());
      continue;
    }
    corpus.per_language[item.language] += 1;
    corpus.items.push_back(std::move(item));
  }
  if (corpus.items.empty()) throw DataError("pretraining corpus '" + path + "' has no usable words");
  return corpus;
}

void save_pretrain_corpus(const PretrainCorpus& corpus, const std::string& path) {
  std::ostringstream out;
  for (const auto& item : corpus.items) out << item.language << '\t' << item.ipa << '\n';
  write_file_atomic(path, out.str());
}

const NamedArray& Checkpoint::param(const std::string& name) const {
  auto it = std::find_if(params.begin(), params.end(), [&](const NamedArray& a) { return a.name == name; });
  if (it == params.end()) throw DataError("checkpoint has no parameter '" + name + "'");
  return *it;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ostringstream manifest;
  manifest << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
  manifest << "seed " << checkpoint.seed << '\n';
  manifest << "epoch " << checkpoint.epoch << '\n';
  for (const auto& [key, value] : checkpoint.config) {
    if (key.find_first_of("\t\n ") != std::string::npos || value.find_first_of("\t\n") != std::string::npos) {
      throw ConfigError("checkpoint config entries may not contain tabs or newlines: '" + key + "'");
    }
    manifest << "config " << key << '\t' << value << '\n';
  }
  std::size_t total = 0;
  for (const auto& p : checkpoint.params) {
    if (p.values.size() != p.rows * p.cols) throw Error("parameter '" + p.name + "' has inconsistent shape");
    manifest << "param " << p.name << ' ' << p.rows << ' ' << p.cols << '\n';
    total += p.values.size();
  }
  manifest << "payload " << total << '\n';

  std::string contents = manifest.str();
  contents.reserve(contents.size() + 8 * total);
  for (const auto& p : checkpoint.params) {
    for (double v : p.values) put_le(contents, v);
  }
  write_file_atomic(path, contents);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string contents = read_file(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = contents.find('\n', pos);
    if (nl == std::string::npos) throw DataError("checkpoint '" + path + "' is truncated (manifest)");
    std::string line = contents.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  const std::string expected_magic = std::string(kCheckpointMagic) + " v" + std::to_string(kCheckpointVersion);
  const std::string magic = next_line();
  if (!magic.starts_with(kCheckpointMagic)) throw DataError("'" + path + "' is not a checkpoint");
  if (magic != expected_magic) {
    throw DataError("checkpoint '" + path + "' has version '" + magic.substr(kCheckpointMagic.size()) +
                    "', expected v" + std::to_string(kCheckpointVersion));
  }

  Checkpoint ck;
  std::size_t payload = 0;
  while (true) {
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "seed") {
      ls >> ck.seed;
    } else if (tag == "epoch") {
      ls >> ck.epoch;
    } else if (tag == "config") {
      const auto rest = line.substr(7);
      const auto tab = rest.find('\t');
      if (tab == std::string::npos) throw DataError("checkpoint '" + path + "': malformed config line");
      ck.config[rest.substr(0, tab)] = rest.substr(tab + 1);
    } else if (tag == "param") {
      NamedArray a;
      ls >> a.name >> a.rows >> a.cols;
      if (!ls) throw DataError("checkpoint '" + path + "': malformed param line");
      ck.params.push_back(std::move(a));
    } else if (tag == "payload") {
      ls >> payload;
      break;
    } else {
      throw DataError("checkpoint '" + path + "': unexpected manifest line '" + line + "'");
    }
  }

  std::size_t declared = 0;
  for (const auto& p : ck.params) declared += p.rows * p.cols;
  if (declared != payload) throw DataError("checkpoint '" + path + "': payload count disagrees with params");
  if (contents.size() - pos < 8 * payload) throw DataError("checkpoint '" + path + "' is truncated (payload)");
  if (contents.size() - pos > 8 * payload) throw DataError("checkpoint '" + path + "' has trailing bytes");

  const char* p = contents.data() + pos;
  for (auto& a : ck.params) {
    a.values.resize(a.rows * a.cols);
    for (auto& v : a.values) {
      v = get_le(p);
      p += 8;
    }
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string& path, const std::map<std::string, std::string>& expected_config) {
  Checkpoint ck = load_checkpoint(path);
  std::string mismatches;
  for (const auto& [key, value] : expected_config) {
    auto it = ck.config.find(key);
    const std::string found = it == ck.config.end() ? "<missing>" : it->second;
    if (found != value) mismatches += " " + key + " (checkpoint " + found + ", expected " + value + ")";
  }
  if (!mismatches.empty()) throw ConfigError("checkpoint '" + path + "' config mismatch:" + mismatches);
  return ck;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sizesym
