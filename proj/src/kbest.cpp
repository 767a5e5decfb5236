#include "rcnnrank/kbest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "rcnnrank/errors.hpp"
#include "text_util.hpp"

namespace rcnnrank {

KBestList KBestList::truncated(std::size_t k) const {
  KBestList out{gold, {}};
  const std::size_t n = std::min(k, candidates.size());
  out.candidates.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank line, or false at end of stream.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!detail::trim(line).empty()) return true;
    }
    return false;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> expect_record(LineReader& reader, std::string& line,
                                            std::string_view tag) {
  if (!reader.next(line))
    throw ParseError(reader.line_no() + 1, "unexpected end of k-best stream, expected " +
                                               std::string(tag));
  auto fields = detail::split_ws(line);
  if (fields.empty() || fields[0] != tag)
    throw ParseError(reader.line_no(), "expected a " + std::string(tag) + " record");
  return fields;
}

}  // namespace

std::vector<KBestList> read_kbest(std::istream& gold, std::istream& candidates,
                                  RootPolicy policy, std::size_t k_max) {
  std::vector<DependencyTree> golds = parse_conll(gold, policy);
  std::vector<KBestList> lists;
  lists.reserve(golds.size());

  LineReader reader(candidates);
  std::string line;
  for (std::size_t s = 0;; ++s) {
    if (!reader.next(line)) {
      if (s != golds.size())
        throw AlignmentError("k-best stream holds " + std::to_string(s) +
                             " sentences but the gold stream holds " +
                             std::to_string(golds.size()));
      break;
    }
    auto header = detail::split_ws(line);
    if (header.size() != 3 || header[0] != "SENT")
      throw ParseError(reader.line_no(), "expected 'SENT <sentence-index> <k>'");
    const auto index = detail::parse_int<std::size_t>(header[1]);
    const auto k = detail::parse_int<std::size_t>(header[2]);
    if (!index || !k) throw ParseError(reader.line_no(), "non-integer field in SENT record");
    if (*index != s)
      throw ParseError(reader.line_no(), "expected sentence index " + std::to_string(s) +
                                             ", found " + std::to_string(*index));
    if (*k == 0) throw ParseError(reader.line_no(), "sentence " + std::to_string(s) +
                                                        " has an empty candidate list");
    if (s >= golds.size())
      throw AlignmentError("k-best stream holds more sentences than the gold stream (" +
                           std::to_string(golds.size()) + ")");

    KBestList list{golds[s], {}};
    list.candidates.reserve(*k);
    for (std::size_t r = 0; r < *k; ++r) {
      auto cand = expect_record(reader, line, "CAND");
      if (cand.size() != 3) throw ParseError(reader.line_no(), "expected 'CAND <rank> <score>'");
      const auto rank = detail::parse_int<std::size_t>(cand[1]);
      const auto score = detail::parse_double(cand[2]);
      if (!rank || !score) throw ParseError(reader.line_no(), "malformed CAND record");
      if (*rank != r)
        throw ParseError(reader.line_no(),
                         "expected rank " + std::to_string(r) + ", found " + std::to_string(*rank));

      auto heads_rec = expect_record(reader, line, "HEAD");
      std::vector<int> heads;
      heads.reserve(heads_rec.size() - 1);
      for (std::size_t i = 1; i < heads_rec.size(); ++i) {
        const auto h = detail::parse_int<int>(heads_rec[i]);
        if (!h) throw ParseError(reader.line_no(), "non-integer head '" +
                                                       std::string(heads_rec[i]) + "'");
        heads.push_back(*h);
      }
      if (heads.size() != list.gold.size())
        throw AlignmentError("sentence " + std::to_string(s) + ", candidate " +
                             std::to_string(r) + ": " + std::to_string(heads.size()) +
                             " heads for " + std::to_string(list.gold.size()) + " tokens");
      try {
        if (k_max == 0 || r < k_max)
          list.candidates.push_back({list.gold.with_heads(heads, policy), *score});
      } catch (const StructureError& e) {
        throw StructureError("sentence " + std::to_string(s) + ", candidate " +
                             std::to_string(r) + ": " + e.what());
      }
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

void write_kbest(std::ostream& out, std::span<const KBestList> lists) {
  for (std::size_t s = 0; s < lists.size(); ++s) {
    const auto& list = lists[s];
    out << "SENT " << s << ' ' << list.candidates.size() << '\n';
    for (std::size_t r = 0; r < list.candidates.size(); ++r) {
      const auto& c = list.candidates[r];
      out << "CAND " << r << ' ' << detail::format_double(c.base_score) << '\n';
      out << "HEAD";
      for (const Token& t : c.tree.tokens()) out << ' ' << t.head;
      out << '\n';
    }
  }
}

}  // namespace rcnnrank
