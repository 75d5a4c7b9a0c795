#include "vxa/isa/assembler.hpp"

#include <cctype>
#include <optional>
#include <unordered_map>
#include <vector>

#include "vxa/isa/instruction.hpp"

namespace vxa::isa {
namespace {

enum class Section { kText, kData };

std::uint32_t align_up(std::uint32_t v, std::uint32_t a) { return (v + a - 1) / a * a; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Strips a trailing ';' comment, ignoring semicolons inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool in_str = false;
  bool in_chr = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if ((in_str || in_chr) && c == '\\') {
      ++i;
      continue;
    }
    if (c == '"' && !in_chr) in_str = !in_str;
    else if (c == '\'' && !in_str) in_chr = !in_chr;
    else if (c == ';' && !in_str && !in_chr) return line.substr(0, i);
  }
  return line;
}

// Splits on commas outside quotes and brackets.
std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  int depth = 0;
  bool in_str = false;
  bool in_chr = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if ((in_str || in_chr) && c == '\\') {
      ++i;
      continue;
    }
    if (c == '"' && !in_chr) in_str = !in_str;
    else if (c == '\'' && !in_str) in_chr = !in_chr;
    else if (!in_str && !in_chr) {
      if (c == '[') ++depth;
      else if (c == ']') --depth;
      else if (c == ',' && depth == 0) {
        out.push_back(trim(s.substr(start, i - start)));
        start = i + 1;
      }
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

struct Line {
  int number = 0;
  Section section = Section::kText;
  std::uint32_t offset = 0;  // section-relative
  std::string op;            // upper-cased mnemonic or directive
  std::vector<std::string> operands;
};

class Assembler {
 public:
  AssemblyUnit run(std::string_view source) {
    first_pass(source);
    return second_pass();
  }

 private:
  // ---- expressions ----------------------------------------------------

  std::optional<std::int64_t> parse_escape(std::string_view s, std::size_t& i, int line) {
    // s[i] is the character after the backslash.
    if (i >= s.size()) throw AsmError(line, "dangling escape");
    const char c = s[i++];
    switch (c) {
      case 'n': return '\n';
      case 't': return '\t';
      case 'r': return '\r';
      case '0': return 0;
      case '\\': return '\\';
      case '"': return '"';
      case '\'': return '\'';
      case 'x': {
        if (i + 2 > s.size() || !std::isxdigit(static_cast<unsigned char>(s[i])) ||
            !std::isxdigit(static_cast<unsigned char>(s[i + 1])))
          throw AsmError(line, "bad \\x escape");
        const int v = std::stoi(std::string(s.substr(i, 2)), nullptr, 16);
        i += 2;
        return v;
      }
      default:
        throw AsmError(line, std::string("unknown escape \\") + c);
    }
  }

  // Evaluates number/identifier terms joined by + and -. `allow_labels`
  // false restricts to constants (.equ values and literals).
  std::int64_t eval(std::string_view text, int line, bool allow_labels) {
    std::string_view s = trim(text);
    if (s.empty()) throw AsmError(line, "missing expression");
    std::size_t i = 0;
    std::int64_t total = 0;
    int sign = 1;
    bool expect_term = true;
    while (i < s.size()) {
      const char c = s[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (expect_term) {
        if (c == '-' || c == '+') {
          if (c == '-') sign = -sign;
          ++i;
          continue;
        }
        std::int64_t v = 0;
        if (std::isdigit(static_cast<unsigned char>(c))) {
          std::size_t j = i;
          while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
          const std::string tok(s.substr(i, j - i));
          try {
            std::size_t used = 0;
            if (tok.size() > 2 && (tok[1] == 'x' || tok[1] == 'X'))
              v = static_cast<std::int64_t>(std::stoull(tok.substr(2), &used, 16)), used += 2;
            else if (tok.size() > 2 && (tok[1] == 'b' || tok[1] == 'B'))
              v = static_cast<std::int64_t>(std::stoull(tok.substr(2), &used, 2)), used += 2;
            else
              v = static_cast<std::int64_t>(std::stoull(tok, &used, 10));
            if (used != tok.size()) throw std::invalid_argument(tok);
          } catch (const std::exception&) {
            throw AsmError(line, "bad number '" + tok + "'");
          }
          i = j;
        } else if (c == '\'') {
          ++i;
          if (i >= s.size()) throw AsmError(line, "unterminated character literal");
          if (s[i] == '\\') {
            ++i;
            v = *parse_escape(s, i, line);
          } else {
            v = static_cast<unsigned char>(s[i++]);
          }
          if (i >= s.size() || s[i] != '\'') throw AsmError(line, "unterminated character literal");
          ++i;
        } else if (is_ident_start(c)) {
          std::size_t j = i;
          while (j < s.size() && is_ident_char(s[j])) ++j;
          const std::string name(s.substr(i, j - i));
          i = j;
          if (auto it = equs_.find(name); it != equs_.end()) {
            v = it->second;
          } else if (!allow_labels) {
            throw AsmError(line, "'" + name + "' is not a constant");
          } else if (auto lt = labels_.find(name); lt != labels_.end()) {
            v = resolve(lt->second);
          } else {
            throw AsmError(line, "undefined label '" + name + "'");
          }
        } else {
          throw AsmError(line, std::string("unexpected '") + c + "' in expression");
        }
        total += sign * v;
        sign = 1;
        expect_term = false;
      } else {
        if (c == '+') sign = 1;
        else if (c == '-') sign = -1;
        else throw AsmError(line, std::string("unexpected '") + c + "' in expression");
        ++i;
        expect_term = true;
      }
    }
    if (expect_term) throw AsmError(line, "incomplete expression");
    return total;
  }

  std::uint32_t eval_u32(std::string_view text, int line) {
    const std::int64_t v = eval(text, line, true);
    if (v < -(std::int64_t{1} << 31) || v > 0xFFFFFFFFll)
      throw AsmError(line, "value does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
  }

  int parse_reg(std::string_view text, int line) {
    const std::string s = upper(trim(text));
    if (s == "SP") return kStackReg;
    if (s.size() == 2 && s[0] == 'R' && s[1] >= '0' && s[1] <= '7') return s[1] - '0';
    throw AsmError(line, "expected register, got '" + std::string(trim(text)) + "'");
  }

  // "[rs]", "[rs+expr]", "[rs-expr]"
  std::pair<int, std::int64_t> parse_mem(std::string_view text, int line) {
    std::string_view s = trim(text);
    if (s.size() < 3 || s.front() != '[' || s.back() != ']')
      throw AsmError(line, "expected memory operand [reg+disp]");
    s = trim(s.substr(1, s.size() - 2));
    std::size_t split = s.find_first_of("+-");
    const int reg = parse_reg(s.substr(0, split), line);
    std::int64_t disp = 0;
    if (split != std::string_view::npos) disp = eval(s.substr(split), line, true);
    return {reg, disp};
  }

  Bytes parse_string(std::string_view text, int line) {
    std::string_view s = trim(text);
    if (s.size() < 2 || s.front() != '"' || s.back() != '"')
      throw AsmError(line, "expected quoted string");
    s = s.substr(1, s.size() - 2);
    Bytes out;
    for (std::size_t i = 0; i < s.size();) {
      if (s[i] == '\\') {
        ++i;
        out.push_back(static_cast<std::uint8_t>(*parse_escape(s, i, line)));
      } else {
        out.push_back(static_cast<std::uint8_t>(s[i++]));
      }
    }
    return out;
  }

  // ---- pass 1 ---------------------------------------------------------

  std::uint32_t& cursor() { return section_ == Section::kText ? text_size_ : data_size_; }

  void define_label(const std::string& name, int line) {
    if (name.empty() || !is_ident_start(name[0]))
      throw AsmError(line, "bad label name '" + name + "'");
    for (char c : name)
      if (!is_ident_char(c)) throw AsmError(line, "bad label name '" + name + "'");
    if (labels_.count(name) || equs_.count(name))
      throw AsmError(line, "duplicate label '" + name + "'");
    labels_[name] = {section_, cursor()};
  }

  void first_pass(std::string_view source) {
    int number = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
      std::size_t nl = source.find('\n', pos);
      if (nl == std::string_view::npos) nl = source.size();
      std::string_view raw = source.substr(pos, nl - pos);
      pos = nl + 1;
      ++number;
      std::string_view text = trim(strip_comment(raw));

      // Leading labels.
      while (true) {
        std::size_t i = 0;
        while (i < text.size() && is_ident_char(text[i])) ++i;
        if (i > 0 && i < text.size() && text[i] == ':') {
          define_label(std::string(text.substr(0, i)), number);
          text = trim(text.substr(i + 1));
        } else {
          break;
        }
      }
      if (text.empty()) continue;

      std::size_t sp = 0;
      while (sp < text.size() && !std::isspace(static_cast<unsigned char>(text[sp]))) ++sp;
      Line ln;
      ln.number = number;
      ln.op = upper(text.substr(0, sp));
      for (auto o : split_operands(text.substr(sp))) ln.operands.emplace_back(o);

      if (ln.op[0] == '.') {
        directive_pass1(ln);
      } else {
        auto op = opcode_from_mnemonic(ln.op);
        if (!op) throw AsmError(number, "unknown mnemonic '" + std::string(text.substr(0, sp)) + "'");
        if (section_ != Section::kText) throw AsmError(number, "instruction outside .text");
        ln.section = section_;
        ln.offset = cursor();
        cursor() += length_of(static_cast<std::uint8_t>(*op));
        lines_.push_back(std::move(ln));
      }
      check_overflow(number);
    }
    if (!entry_label_) throw AsmError(number, "missing .entry directive");
  }

  void expect_operands(const Line& ln, std::size_t n) {
    if (ln.operands.size() != n)
      throw AsmError(ln.number, ln.op + " expects " + std::to_string(n) + " operand(s)");
  }

  void directive_pass1(Line& ln) {
    const std::string& d = ln.op;
    if (d == ".TEXT" || d == ".DATA") {
      expect_operands(ln, 0);
      section_ = d == ".TEXT" ? Section::kText : Section::kData;
      return;
    }
    if (d == ".ENTRY" || d == "._ENTRY") {
      expect_operands(ln, 1);
      if (entry_label_) throw AsmError(ln.number, "duplicate .entry");
      entry_label_ = ln.operands[0];
      entry_line_ = ln.number;
      return;
    }
    if (d == ".EQU") {
      expect_operands(ln, 2);
      const std::string& name = ln.operands[0];
      if (labels_.count(name) || equs_.count(name))
        throw AsmError(ln.number, "duplicate symbol '" + name + "'");
      if (name.empty() || !is_ident_start(name[0]))
        throw AsmError(ln.number, "bad .equ name");
      equs_[name] = eval(ln.operands[1], ln.number, false);
      return;
    }
    ln.section = section_;
    ln.offset = cursor();
    if (d == ".BYTE" || d == ".WORD") {
      if (ln.operands.empty()) throw AsmError(ln.number, d + " needs at least one value");
      cursor() += static_cast<std::uint32_t>(ln.operands.size() * (d == ".BYTE" ? 1 : 4));
      mark_initialized();
    } else if (d == ".ASCII") {
      expect_operands(ln, 1);
      cursor() += static_cast<std::uint32_t>(parse_string(ln.operands[0], ln.number).size());
      mark_initialized();
    } else if (d == ".SPACE") {
      expect_operands(ln, 1);
      const std::int64_t n = eval(ln.operands[0], ln.number, false);
      if (n < 0 || n > kAssemblerTop) throw AsmError(ln.number, ".space size out of range");
      cursor() += static_cast<std::uint32_t>(n);
    } else if (d == ".ALIGN") {
      expect_operands(ln, 1);
      const std::int64_t a = eval(ln.operands[0], ln.number, false);
      if (a <= 0 || a > kPageSize || (a & (a - 1)) != 0)
        throw AsmError(ln.number, ".align needs a power of two up to 4096");
      const std::uint32_t before = cursor();
      cursor() = align_up(before, static_cast<std::uint32_t>(a));
      if (section_ == Section::kText && cursor() != before) mark_initialized();
    } else {
      throw AsmError(ln.number, "unknown directive '" + d + "'");
    }
    lines_.push_back(std::move(ln));
  }

  void mark_initialized() {
    if (section_ == Section::kData) data_initialized_ = data_size_;
  }

  void check_overflow(int line) {
    const std::uint64_t text_end = std::uint64_t{kTextBase} + text_size_;
    const std::uint64_t data_end = align_up64(text_end) + data_size_;
    if (text_end > kAssemblerTop || data_end > kAssemblerTop)
      throw AsmError(line, "section overflow");
  }

  static std::uint64_t align_up64(std::uint64_t v) {
    return (v + kPageSize - 1) / kPageSize * kPageSize;
  }

  // ---- pass 2 ---------------------------------------------------------

  struct LabelDef {
    Section section;
    std::uint32_t offset;
  };

  std::uint32_t resolve(const LabelDef& l) const {
    return (l.section == Section::kText ? kTextBase : data_base_) + l.offset;
  }

  AssemblyUnit second_pass() {
    data_base_ = static_cast<std::uint32_t>(align_up64(std::uint64_t{kTextBase} + text_size_));
    if (text_size_ == 0) throw AsmError(entry_line_, "empty .text section");

    Bytes text(text_size_, 0);
    Bytes data(data_size_, 0);

    for (const Line& ln : lines_) {
      Bytes& out = ln.section == Section::kText ? text : data;
      Bytes chunk;
      if (ln.op[0] == '.') {
        chunk = emit_directive(ln);
      } else {
        encode_instruction(build_instruction(ln), chunk);
      }
      std::copy(chunk.begin(), chunk.end(), out.begin() + ln.offset);
    }

    AssemblyUnit unit;
    auto it = labels_.find(*entry_label_);
    if (it == labels_.end())
      throw AsmError(entry_line_, "undefined entry label '" + *entry_label_ + "'");
    unit.image.entry = resolve(it->second);
    if (it->second.section != Section::kText)
      throw AsmError(entry_line_, "entry label is not in .text");

    Segment ts;
    ts.header.vaddr = kTextBase;
    ts.header.memsz = align_up(text_size_, kPageSize);
    ts.header.filesz = text_size_;
    ts.header.perm = kPermR | kPermX;
    ts.data = std::move(text);
    unit.image.segments.push_back(std::move(ts));

    if (data_size_ > 0) {
      Segment ds;
      ds.header.vaddr = data_base_;
      ds.header.memsz = align_up(data_size_, kPageSize);
      ds.header.filesz = data_initialized_;
      ds.header.perm = kPermR | kPermW;
      ds.data.assign(data.begin(), data.begin() + data_initialized_);
      unit.image.segments.push_back(std::move(ds));
    }
    for (const auto& [name, def] : labels_) unit.symbols[name] = resolve(def);
    unit.text_size = text_size_;
    unit.data_size = data_size_;
    return unit;
  }

  Bytes emit_directive(const Line& ln) {
    Bytes out;
    if (ln.op == ".BYTE") {
      for (const auto& o : ln.operands) {
        const std::int64_t v = eval(o, ln.number, true);
        if (v < -128 || v > 255) throw AsmError(ln.number, ".byte value out of range");
        out.push_back(static_cast<std::uint8_t>(v));
      }
    } else if (ln.op == ".WORD") {
      ByteWriter w(out);
      for (const auto& o : ln.operands) w.u32(eval_u32(o, ln.number));
    } else if (ln.op == ".ASCII") {
      out = parse_string(ln.operands[0], ln.number);
    }
    return out;  // .space and .align leave zeros in place
  }

  Instruction build_instruction(const Line& ln) {
    const Opcode op = *opcode_from_mnemonic(ln.op);
    const int n = ln.number;
    try {
      switch (format_of(static_cast<std::uint8_t>(op))) {
        case Format::kRegImm:
          expect_operands(ln, 2);
          return make_reg_imm(op, parse_reg(ln.operands[0], n), eval_u32(ln.operands[1], n));
        case Format::kRegReg:
          expect_operands(ln, 2);
          return make_reg_reg(op, parse_reg(ln.operands[0], n), parse_reg(ln.operands[1], n));
        case Format::kMem: {
          expect_operands(ln, 2);
          auto [base, disp] = parse_mem(ln.operands[1], n);
          if (disp < -32768 || disp > 32767) throw AsmError(n, "displacement out of 16-bit range");
          return make_mem(op, parse_reg(ln.operands[0], n), base, static_cast<std::int32_t>(disp));
        }
        case Format::kImm:
          expect_operands(ln, 1);
          return make_imm(op, eval_u32(ln.operands[0], n));
        case Format::kReg:
          expect_operands(ln, 1);
          return make_reg(op, parse_reg(ln.operands[0], n));
        case Format::kBranch:
          expect_operands(ln, 3);
          return make_branch(op, parse_reg(ln.operands[0], n), parse_reg(ln.operands[1], n),
                             eval_u32(ln.operands[2], n));
        case Format::kNone:
          expect_operands(ln, 0);
          return make_ret();
        case Format::kSys: {
          expect_operands(ln, 1);
          const std::int64_t v = eval(ln.operands[0], n, true);
          if (v < 0 || v > 255) throw AsmError(n, "syscall number out of range");
          return make_sys(static_cast<std::uint8_t>(v));
        }
        case Format::kInvalid:
          break;
      }
    } catch (const EncodeError& e) {
      throw AsmError(n, e.what());
    }
    throw AsmError(n, "unencodable instruction");
  }

  Section section_ = Section::kText;
  std::uint32_t text_size_ = 0;
  std::uint32_t data_size_ = 0;
  std::uint32_t data_initialized_ = 0;
  std::uint32_t data_base_ = 0;
  std::optional<std::string> entry_label_;
  int entry_line_ = 0;
  std::vector<Line> lines_;
  std::unordered_map<std::string, LabelDef> labels_;
  std::unordered_map<std::string, std::int64_t> equs_;
};

}  // namespace

AssemblyUnit assemble_unit(std::string_view source) {
  Assembler a;
  return a.run(source);
}

}  // namespace vxa::isa
