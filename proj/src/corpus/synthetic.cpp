// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0

#include "codeshield/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <set>
#include <string_view>
#include <unordered_set>

#include "codeshield/common.hpp"

namespace codeshield {

namespace {

using Pool = std::vector<std::string_view>;

struct Family {
  std::string_view verb;
  Pool suffixes;
  std::vector<std::string_view> templates;
};

// Placeholders: ${Name} method name, ${mod} modifiers, ${T} element type,
// ${N} numeric type, ${Noun}/${Prop} capitalized words, everything else an
// identifier role drawn from roles().
const std::vector<Family>& families() {
  static const std::vector<Family> f = {
      {"get",
       {"", "At", "ById", "ByKey", "OrDefault"},
       {R"(${mod} ${T} ${Name}(int ${idx}) {
    ${T} ${res} = ${store}.get(${idx});
    return ${res};
})",
        R"(${mod} ${T} ${Name}(String ${key}, ${T} ${fallback}) {
    ${T} ${value} = ${cache}.get(${key});
    if (${value} == null) {
        return ${fallback};
    }
    return ${value};
})"}},
      {"set",
       {"", "Value", "At", "Field"},
       {R"(${mod} void ${Name}(${T} ${value}) {
    if (${value} == null) {
        throw new IllegalArgumentException("${field} must not be null");
    }
    this.${field} = ${value};
})",
        R"(${mod} void ${Name}(int ${idx}, ${T} ${value}) {
    ${T} ${previous} = ${store}.set(${idx}, ${value});
    ${listener}.onChange(${previous}, ${value});
})"}},
      {"count",
       {"", "s", "Matches", "Occurrences", "Above"},
       {R"(${mod} int ${Name}(List<${T}> ${coll}, ${T} ${target}) {
    int ${cnt} = 0;
    for (${T} ${elem} : ${coll}) {
        if (${elem}.equals(${target})) {
            ${cnt}++;
        }
    }
    return ${cnt};
})",
        R"(${mod} int ${Name}(${N}[] ${coll}, ${N} ${limit}) {
    int ${cnt} = 0;
    for (int ${idx} = 0; ${idx} < ${coll}.length; ${idx}++) {
        if (${coll}[${idx}] > ${limit}) {
            ${cnt} += 1;
        }
    }
    return ${cnt};
})"}},
      {"sum",
       {"", "s", "Of", "All", "Values"},
       {R"(${mod} ${N} ${Name}(${N}[] ${coll}) {
    ${N} ${acc} = 0;
    for (int ${idx} = 0; ${idx} < ${coll}.length; ${idx}++) {
        ${acc} += ${coll}[${idx}];
    }
    return ${acc};
})",
        R"(${mod} double ${Name}(List<${Noun}> ${coll}) {
    double ${acc} = 0.0;
    for (${Noun} ${elem} : ${coll}) {
        ${acc} += ${elem}.get${Prop}();
    }
    return ${acc};
})"}},
      {"find",
       {"", "Index", "ById", "First", "ByName"},
       {R"(${mod} int ${Name}(${T}[] ${coll}, ${T} ${target}) {
    for (int ${idx} = 0; ${idx} < ${coll}.length; ${idx}++) {
        if (${coll}[${idx}].equals(${target})) {
            return ${idx};
        }
    }
    return -1;
})",
        R"(${mod} ${Noun} ${Name}(List<${Noun}> ${coll}, String ${key}) {
    ${Noun} ${found} = null;
    for (${Noun} ${elem} : ${coll}) {
        if (${elem}.getId().equals(${key})) {
            ${found} = ${elem};
            break;
        }
    }
    return ${found};
})"}},
      {"is",
       {"", "Valid", "Empty", "Active", "Allowed"},
       {R"(${mod} boolean ${Name}(String ${text}) {
    if (${text} == null || ${text}.isEmpty()) {
        return false;
    }
    for (char ${ch} : ${text}.toCharArray()) {
        if (!Character.isLetterOrDigit(${ch})) {
            return false;
        }
    }
    return true;
})",
        R"(${mod} boolean ${Name}(${Noun} ${elem}) {
    boolean ${flag} = ${elem} != null && ${elem}.get${Prop}() > 0;
    return ${flag};
})"}},
      {"max",
       {"", "Value", "Of", "By${Prop}"},
       {R"(${mod} ${N} ${Name}(${N}[] ${coll}) {
    ${N} ${best} = ${coll}[0];
    for (int ${idx} = 1; ${idx} < ${coll}.length; ${idx}++) {
        if (${coll}[${idx}] > ${best}) {
            ${best} = ${coll}[${idx}];
        }
    }
    return ${best};
})",
        R"(${mod} ${Noun} ${Name}(List<${Noun}> ${coll}) {
    ${Noun} ${best} = null;
    for (${Noun} ${elem} : ${coll}) {
        if (${best} == null || ${elem}.get${Prop}() > ${best}.get${Prop}()) {
            ${best} = ${elem};
        }
    }
    return ${best};
})"}},
      {"copy",
       {"", "s", "Of", "All", "Array"},
       {R"(${mod} List<${T}> ${Name}(List<${T}> ${coll}) {
    List<${T}> ${res} = new ArrayList<>(${coll}.size());
    for (${T} ${elem} : ${coll}) {
        ${res}.add(${elem});
    }
    return ${res};
})",
        R"(${mod} ${N}[] ${Name}(${N}[] ${coll}) {
    ${N}[] ${res} = new ${N}[${coll}.length];
    System.arraycopy(${coll}, 0, ${res}, 0, ${coll}.length);
    return ${res};
})"}},
      {"print",
       {"", "s", "All", "Summary", "Details"},
       {R"(${mod} void ${Name}(List<${T}> ${coll}) {
    StringBuilder ${builder} = new StringBuilder();
    for (${T} ${elem} : ${coll}) {
        ${builder}.append(${elem}).append(", ");
    }
    System.out.println(${builder}.toString());
})",
        R"(${mod} void ${Name}(${Noun} ${elem}) {
    String ${msg} = "${Noun}: " + ${elem}.getId();
    ${logger}.info(${msg});
})"}},
      {"remove",
       {"", "s", "All", "ById", "If"},
       {R"(${mod} boolean ${Name}(List<${T}> ${coll}, ${T} ${target}) {
    Iterator<${T}> ${iter} = ${coll}.iterator();
    boolean ${flag} = false;
    while (${iter}.hasNext()) {
        if (${iter}.next().equals(${target})) {
            ${iter}.remove();
            ${flag} = true;
        }
    }
    return ${flag};
})",
        R"(${mod} void ${Name}(String ${key}) {
    ${Noun} ${removed} = ${cache}.remove(${key});
    if (${removed} != null) {
        ${counter}--;
    }
})"}},
      {"sort",
       {"", "s", "By${Prop}", "Ascending", "Array"},
       {R"(${mod} void ${Name}(${N}[] ${coll}) {
    for (int ${idx} = 0; ${idx} < ${coll}.length - 1; ${idx}++) {
        for (int ${jdx} = 0; ${jdx} < ${coll}.length - 1 - ${idx}; ${jdx}++) {
            if (${coll}[${jdx}] > ${coll}[${jdx} + 1]) {
                ${N} ${tmp} = ${coll}[${jdx}];
                ${coll}[${jdx}] = ${coll}[${jdx} + 1];
                ${coll}[${jdx} + 1] = ${tmp};
            }
        }
    }
})",
        R"(${mod} List<${Noun}> ${Name}(List<${Noun}> ${coll}) {
    List<${Noun}> ${res} = new ArrayList<>(${coll});
    ${res}.sort((${lhs}, ${rhs}) -> Double.compare(${lhs}.get${Prop}(), ${rhs}.get${Prop}()));
    return ${res};
})"}},
      {"reverse",
       {"", "s", "Order", "InPlace", "Array"},
       {R"(${mod} void ${Name}(${T}[] ${coll}) {
    int ${left} = 0;
    int ${right} = ${coll}.length - 1;
    while (${left} < ${right}) {
        ${T} ${tmp} = ${coll}[${left}];
        ${coll}[${left}] = ${coll}[${right}];
        ${coll}[${right}] = ${tmp};
        ${left}++;
        ${right}--;
    }
})",
        R"(${mod} String ${Name}(String ${text}) {
    StringBuilder ${builder} = new StringBuilder(${text});
    return ${builder}.reverse().toString();
})"}},
  };
  return f;
}

const Pool kNouns = {"User",    "Order",   "Item",    "Record",  "Account", "Product", "Customer",
                     "Invoice", "Message", "Event",   "Task",    "Node",    "Entry",   "File",
                     "Student", "Book",    "Ticket",  "Payment", "Device",  "Session", "Employee",
                     "Score",   "Price",   "Token",   "Word",    "Report",  "Package", "Route"};
const Pool kProps = {"Price", "Score", "Amount", "Weight", "Age", "Balance", "Rank", "Size"};
const Pool kNumeric = {"int", "long", "double"};
const Pool kModifiers = {"public", "public", "public", "private", "protected", "public final"};
const Pool kComments = {"// helper used by the service layer\n", "/* keep in sync with caller */\n",
                        "// legacy behaviour, see ticket\n", "// not thread safe\n"};

const std::map<std::string_view, Pool>& roles() {
  static const std::map<std::string_view, Pool> r = {
      {"coll", {"items", "values", "list", "elements", "entries", "records", "data", "source",
                "input", "array", "candidates", "pool", "batch", "buffer", "collection"}},
      {"elem", {"item", "value", "element", "entry", "current", "candidate", "next", "e", "x",
                "each", "obj"}},
      {"idx", {"i", "j", "k", "idx", "index", "pos", "n", "p"}},
      {"jdx", {"j", "k", "m", "q", "inner", "col"}},
      {"target", {"target", "key", "query", "needle", "wanted", "expected", "search", "probe"}},
      {"cnt", {"count", "counter", "matches", "hits", "tally", "occurrences", "numFound",
               "matchCount"}},
      {"acc", {"sum", "total", "acc", "accumulator", "running", "subtotal", "aggregate"}},
      {"best", {"max", "best", "largest", "highest", "top", "maximum", "peak", "winner"}},
      {"res", {"result", "copy", "out", "output", "ret", "clone", "duplicate", "res", "sorted"}},
      {"key", {"key", "id", "name", "code", "identifier", "lookupKey"}},
      {"fallback", {"fallback", "defaultValue", "orElse", "alternative"}},
      {"value", {"value", "newValue", "val", "v", "update", "replacement"}},
      {"previous", {"previous", "old", "oldValue", "prior", "replaced"}},
      {"text", {"text", "str", "s", "line", "word", "raw"}},
      {"ch", {"ch", "c", "character", "symbol"}},
      {"flag", {"found", "removed", "changed", "modified", "ok", "valid", "active", "result"}},
      {"iter", {"iter", "iterator", "cursor", "walker"}},
      {"builder", {"builder", "sb", "buffer", "joiner"}},
      {"msg", {"msg", "message", "line", "summary"}},
      {"removed", {"removed", "old", "previous", "evicted", "entry"}},
      {"tmp", {"tmp", "temp", "swap", "t", "hold", "saved"}},
      {"left", {"left", "lo", "start", "low", "head"}},
      {"right", {"right", "hi", "end", "high", "tail"}},
      {"lhs", {"a", "x", "p1", "first", "lhs"}},
      {"rhs", {"b", "y", "p2", "second", "rhs"}},
      {"limit", {"limit", "threshold", "min", "bound", "cutoff", "minimum"}},
      {"found", {"found", "match", "hit", "result", "selected"}},
      // fields
      {"store", {"items", "values", "entries", "store", "elements", "slots"}},
      {"cache", {"cache", "map", "index", "registry", "lookup", "table"}},
      {"listener", {"listener", "observer", "callback", "handler"}},
      {"logger", {"logger", "log", "audit"}},
      {"counter", {"size", "count", "total", "population"}},
  };
  return r;
}

std::string lower_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  return out;
}

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  std::string one() {
    const auto& fams = families();
    const Family& fam = fams[pick_index(fams.size())];
    const std::string_view tmpl = fam.templates[pick_index(fam.templates.size())];
    const std::string noun(pick(kNouns));
    const std::string prop(pick(kProps));
    const std::string numeric(pick(kNumeric));
    const std::string elem_type =
        std::uniform_int_distribution<int>(0, 3)(rng_) == 0
            ? noun
            : std::string(pick(Pool{"String", "Integer", "Long", "Double"}));

    std::string suffix(pick(fam.suffixes));
    replace_all(suffix, "${Prop}", prop);
    std::map<std::string, std::string> values = {
        {"Name", std::string(fam.verb) + noun + suffix},
        {"mod", std::string(pick(kModifiers))},
        {"T", elem_type},
        {"N", numeric},
        {"Noun", noun},
        {"Prop", prop},
        {"field", lower_first(noun)},
    };

    // Distinct identifier names for every role the template uses.
    std::set<std::string> taken = {values["field"], lower_first(noun) + "s"};
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
      const auto open = tmpl.find("${", pos);
      if (open == std::string_view::npos) {
        out.append(tmpl.substr(pos));
        break;
      }
      const auto close = tmpl.find('}', open);
      const std::string key(tmpl.substr(open + 2, close - open - 2));
      out.append(tmpl.substr(pos, open - pos));
      auto it = values.find(key);
      if (it == values.end()) {
        it = values.emplace(key, fresh_name(key, noun, taken)).first;
      }
      out += it->second;
      pos = close + 1;
    }
    if (std::uniform_int_distribution<int>(0, 9)(rng_) < 2) out = std::string(pick(kComments)) + out;
    return out + "\n";
  }

 private:
  std::size_t pick_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  std::string_view pick(const Pool& pool) { return pool[pick_index(pool.size())]; }

  std::string fresh_name(const std::string& role, const std::string& noun,
                         std::set<std::string>& taken) {
    const auto& pool = roles().at(role);
    // Occasionally derive the name from the method's noun, as real code does.
    const int coin = std::uniform_int_distribution<int>(0, 9)(rng_);
    std::string candidate;
    if (coin < 3 && role == "coll") {
      candidate = lower_first(noun) + (coin == 0 ? "List" : "s");
    } else if (coin < 3 && (role == "elem" || role == "value")) {
      candidate = lower_first(noun);
    }
    for (int attempt = 0; attempt < 64 && (candidate.empty() || taken.count(candidate)); ++attempt)
      candidate = std::string(pick(pool));
    if (taken.count(candidate)) candidate += std::to_string(taken.size());
    taken.insert(candidate);
    return candidate;
  }

  static void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
      s.replace(p, from.size(), to);
  }

  std::mt19937_64 rng_;
};

}  // namespace

const std::vector<std::string>& synthetic_families() {
  static const std::vector<std::string> verbs = [] {
    std::vector<std::string> v;
    for (const auto& f : families()) v.emplace_back(f.verb);
    return v;
  }();
  return verbs;
}

std::vector<std::string> generate_synthetic_corpus(std::size_t count, std::uint64_t seed) {
  Generator gen(seed);
  std::vector<std::string> out;
  std::unordered_set<std::uint64_t> seen;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 50 + 1000)
      throw Error("synthetic generator could not produce " + std::to_string(count) +
                  " distinct methods");
    std::string src = gen.one();
    if (seen.insert(fnv1a64(src)).second) out.push_back(std::move(src));
  }
  return out;
}

}  // namespace codeshield
