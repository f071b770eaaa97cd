// commfree: command-line front end for the library. JSON on stdout by
// default (--text for a flat human layout); exit 0 = success/true,
// 1 = false/impossibility, 2 = search refusal, 3 = input error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commfree/comm.hpp"
#include "commfree/conjugacy.hpp"
#include "commfree/families.hpp"
#include "commfree/homs.hpp"
#include "commfree/propprobe.hpp"
#include "commfree/stallings.hpp"
#include "commfree/words.hpp"

using json = nlohmann::ordered_json;
using namespace commfree;

namespace {

// "@path" loads the file, anything else is taken literally.
std::string load_payload(const std::string& spec) {
  if (spec.empty() || spec[0] != '@') return spec;
  std::ifstream in(spec.substr(1));
  if (!in) throw std::invalid_argument("cannot read " + spec.substr(1));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

json subgroup_to_json(const Subgroup& s) {
  const SubgroupGraph& g = s.graph();
  const RankContext& ctx = s.context();
  json edges = json::object();
  for (int gen = 0; gen < g.ambient_rank; ++gen) {
    json darts = json::array();
    for (int v = 0; v < g.n; ++v)
      if (g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)] >= 0)
        darts.push_back({v, g.succ[static_cast<size_t>(gen)][static_cast<size_t>(v)]});
    edges[ctx.name(gen)] = std::move(darts);
  }
  return json{{"vertices", g.n}, {"base", 0}, {"edges", std::move(edges)}};
}

Subgroup subgroup_from_json(const RankContext& ctx, const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "whole") return Subgroup::whole_group(ctx);
    throw std::invalid_argument("unknown subgroup keyword: " + j.get<std::string>());
  }
  if (j.is_array()) {
    std::vector<Word> gens;
    for (const json& e : j) gens.push_back(parse_word(ctx, e.get<std::string>()));
    return Subgroup::from_generators(ctx, gens);
  }
  if (!j.is_object()) throw std::invalid_argument("subgroup must be a keyword, list or graph");
  SubgroupGraph g;
  g.ambient_rank = ctx.rank();
  g.n = j.at("vertices").get<int>();
  if (g.n < 1) throw std::invalid_argument("graph needs at least the base vertex");
  if (j.contains("base") && j.at("base").get<int>() != 0)
    throw std::invalid_argument("base vertex must be 0");
  g.succ.assign(static_cast<size_t>(g.ambient_rank), std::vector<int>(static_cast<size_t>(g.n), -1));
  g.pred = g.succ;
  const json& edges = j.at("edges");
  for (auto it = edges.begin(); it != edges.end(); ++it) {
    std::optional<int> gen = ctx.index_of(it.key());
    if (!gen) throw std::invalid_argument("unknown generator: " + it.key());
    for (const json& dart : it.value()) {
      int u = dart.at(0).get<int>(), v = dart.at(1).get<int>();
      if (u < 0 || u >= g.n || v < 0 || v >= g.n)
        throw std::invalid_argument("dart endpoint out of range");
      g.succ[static_cast<size_t>(*gen)][static_cast<size_t>(u)] = v;
      g.pred[static_cast<size_t>(*gen)][static_cast<size_t>(v)] = u;
    }
  }
  return Subgroup::from_graph(ctx, g);
}

// "whole", "@file", inline JSON, or a ;/, separated generator list.
Subgroup parse_subgroup(const RankContext& ctx, const std::string& spec) {
  std::string s = trimmed(load_payload(spec));
  if (s.empty()) throw std::invalid_argument("empty subgroup");
  if (s == "whole") return Subgroup::whole_group(ctx);
  if (s[0] == '{' || s[0] == '[') return subgroup_from_json(ctx, json::parse(s));
  std::vector<Word> gens;
  size_t start = 0;
  while (start <= s.size()) {
    size_t cut = s.find_first_of(";,", start);
    std::string piece = trimmed(s.substr(start, cut == std::string::npos ? cut : cut - start));
    if (!piece.empty()) gens.push_back(parse_word(ctx, piece));
    if (cut == std::string::npos) break;
    start = cut + 1;
  }
  if (gens.empty()) throw std::invalid_argument("empty generator list");
  return Subgroup::from_generators(ctx, gens);
}

json hom_to_json(const RankContext& ctx, const FreeHom& h) {
  json images = json::array();
  for (const Word& w : h.images) images.push_back(format_word(ctx, w));
  return json{{"domain", subgroup_to_json(h.domain)},
              {"codomain", subgroup_to_json(h.codomain)},
              {"images", std::move(images)},
              {"iso", h.iso}};
}

FreeHom hom_from_json(const RankContext& ctx, const json& j) {
  Subgroup dom = subgroup_from_json(ctx, j.at("domain"));
  Subgroup cod = subgroup_from_json(ctx, j.at("codomain"));
  std::vector<Word> images;
  for (const json& e : j.at("images")) images.push_back(parse_word(ctx, e.get<std::string>()));
  return hom_from_images(dom, cod, images);
}

FreeHom parse_hom(const RankContext& ctx, const std::string& spec) {
  return hom_from_json(ctx, json::parse(load_payload(spec)));
}

json comm_to_json(const RankContext& ctx, const Commensuration& c) {
  json images = json::array();
  for (const Word& w : c.iso.images) images.push_back(format_word(ctx, w));
  return json{{"flavor", c.flavor == Flavor::pro_p ? "pro_p" : "profinite"},
              {"p", c.p},
              {"U", subgroup_to_json(c.iso.domain)},
              {"V", subgroup_to_json(c.iso.codomain)},
              {"images", std::move(images)}};
}

Flavor parse_flavor(const std::string& s) {
  if (s == "profinite") return Flavor::profinite;
  if (s == "pro_p" || s == "pro-p") return Flavor::pro_p;
  throw std::invalid_argument("flavor must be profinite or pro_p");
}

Commensuration comm_from_json(const RankContext& ctx, const json& j) {
  Flavor flavor = parse_flavor(j.at("flavor").get<std::string>());
  long long p = j.value("p", 0LL);
  Subgroup u = subgroup_from_json(ctx, j.at("U"));
  Subgroup v = subgroup_from_json(ctx, j.at("V"));
  std::vector<Word> images;
  for (const json& e : j.at("images")) images.push_back(parse_word(ctx, e.get<std::string>()));
  return make_commensuration(flavor, p, hom_from_images(u, v, images));
}

Commensuration parse_comm(const RankContext& ctx, const std::string& spec) {
  return comm_from_json(ctx, json::parse(load_payload(spec)));
}

void print_human(const json& j, std::ostream& os, int indent) {
  std::string pad(static_cast<size_t>(indent), ' ');
  auto inline_ok = [](const json& v) { return v.is_primitive() || v.dump().size() <= 60; };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (inline_ok(it.value())) {
        os << pad << it.key() << ": " << it.value().dump() << "\n";
      } else {
        os << pad << it.key() << ":\n";
        print_human(it.value(), os, indent + 2);
      }
    }
  } else if (j.is_array()) {
    for (const json& e : j) {
      if (inline_ok(e)) {
        os << pad << "- " << e.dump() << "\n";
      } else {
        os << pad << "-\n";
        print_human(e, os, indent + 2);
      }
    }
  } else {
    os << pad << j.dump() << "\n";
  }
}

struct Session {
  std::string context_names = "a b";
  bool text = false;
  json out;
  int rc = 0;

  RankContext context() const {
    std::vector<std::string> names;
    std::istringstream in(context_names);
    for (std::string tok; in >> tok;) names.push_back(tok);
    if (names.empty()) throw std::invalid_argument("empty context");
    return RankContext(names);
  }

  void emit() const {
    if (text)
      print_human(out, std::cout, 0);
    else
      std::cout << out.dump(2) << "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  Session ses;
  CLI::App app{"exact computation in the commensurators of free groups"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--context", ses.context_names, "generator names, space separated")
      ->capture_default_str();
  app.add_flag("--text", ses.text, "flat human-readable output instead of JSON");

  // ----- word -----
  auto* word = app.add_subcommand("word", "free reduction, roots, exponent sums");
  word->require_subcommand(1);
  {
    auto opts = std::make_shared<std::string>();
    auto* c = word->add_subcommand("reduce", "freely reduce a word");
    c->add_option("--word", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = {{"word", format_word(ctx, parse_word(ctx, *opts))}};
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = word->add_subcommand("root", "maximal root and exponent");
    c->add_option("--word", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      auto [root, e] = maximal_root(parse_word(ctx, *opts));
      ses.out = {{"root", format_word(ctx, root)}, {"exponent", e}};
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, long long>>("", 0);
    auto* c = word->add_subcommand("abel", "exponent-sum vector, optionally mod m");
    c->add_option("--word", opts->first)->required();
    c->add_option("--mod", opts->second, "reduce entries mod m");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Word w = parse_word(ctx, opts->first);
      ses.out = {{"vector", opts->second > 0 ? abelianize_mod(ctx.rank(), w, opts->second)
                                             : abelianize(ctx.rank(), w)}};
    });
  }

  // ----- sub -----
  auto* sub = app.add_subcommand("sub", "subgroups as folded core graphs");
  sub->require_subcommand(1);
  {
    auto opts = std::make_shared<std::string>();
    auto* c = sub->add_subcommand("index", "index in the ambient group");
    c->add_option("--sub", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      std::optional<long long> idx = parse_subgroup(ctx, *opts).index();
      ses.out = {{"index", idx ? json(*idx) : json(nullptr)}};
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = sub->add_subcommand("basis", "free basis and canonical graph");
    c->add_option("--sub", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Subgroup s = parse_subgroup(ctx, *opts);
      json basis = json::array();
      for (const Word& w : s.basis()) basis.push_back(format_word(ctx, w));
      ses.out = {{"rank", s.rank()},
                 {"index", s.index() ? json(*s.index()) : json(nullptr)},
                 {"basis", std::move(basis)},
                 {"graph", subgroup_to_json(s)}};
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>();
    auto* c = sub->add_subcommand("intersect", "intersection of two subgroups");
    c->add_option("--a", opts->first)->required();
    c->add_option("--b", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Subgroup s = intersect(parse_subgroup(ctx, opts->first), parse_subgroup(ctx, opts->second));
      ses.out = {{"rank", s.rank()},
                 {"index", s.index() ? json(*s.index()) : json(nullptr)},
                 {"graph", subgroup_to_json(s)}};
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = sub->add_subcommand("core", "largest normal subgroup inside");
    c->add_option("--sub", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Subgroup s = normal_core(parse_subgroup(ctx, *opts));
      ses.out = {{"rank", s.rank()},
                 {"index", s.index() ? json(*s.index()) : json(nullptr)},
                 {"graph", subgroup_to_json(s)}};
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = sub->add_subcommand("normal", "normality test (exit 1 when not)");
    c->add_option("--sub", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      bool n = is_normal(parse_subgroup(ctx, *opts));
      ses.out = {{"normal", n}};
      ses.rc = n ? 0 : 1;
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, long long>>("", 2);
    auto* c = sub->add_subcommand("popen", "index-p subnormal chain test");
    c->add_option("--sub", opts->first)->required();
    c->add_option("--p", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      PopennessCertificate cert = is_p_open(parse_subgroup(ctx, opts->first), opts->second);
      json chain = json::array();
      for (const Subgroup& s : cert.chain) chain.push_back(subgroup_to_json(s));
      ses.out = {{"p_open", cert.open}, {"chain", std::move(chain)}, {"reason", cert.reason}};
      ses.rc = cert.open ? 0 : 1;
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = sub->add_subcommand("hall", "finite-index overgroup with the subgroup as a free factor");
    c->add_option("--sub", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      HallCompletion h = hall_completion(parse_subgroup(ctx, *opts));
      json basis = json::array();
      for (const Word& w : h.extended_basis) basis.push_back(format_word(ctx, w));
      ses.out = {{"overgroup", subgroup_to_json(h.overgroup)},
                 {"index", h.overgroup.index() ? json(*h.overgroup.index()) : json(nullptr)},
                 {"extended_basis", std::move(basis)}};
    });
  }

  // ----- hom -----
  auto* hom = app.add_subcommand("hom", "homomorphisms between subgroups");
  hom->require_subcommand(1);
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>();
    auto* c = hom->add_subcommand("apply", "image of a word");
    c->add_option("--hom", opts->first)->required();
    c->add_option("--word", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      FreeHom h = parse_hom(ctx, opts->first);
      Word w = parse_word(ctx, opts->second);
      if (!h.domain.contains(w)) throw std::invalid_argument("word not in the domain");
      ses.out = {{"image", format_word(ctx, apply_hom(h, w))}};
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = hom->add_subcommand("det", "determinant of the abelianized map");
    c->add_option("--hom", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = {{"det", det_abel(parse_hom(ctx, *opts))}};
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>();
    auto* c = hom->add_subcommand("compose", "composite, --first applied first");
    c->add_option("--first", opts->first)->required();
    c->add_option("--second", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = hom_to_json(ctx, compose(parse_hom(ctx, opts->second), parse_hom(ctx, opts->first)));
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = hom->add_subcommand("invert", "inverse of a certified isomorphism");
    c->add_option("--hom", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = hom_to_json(ctx, invert_hom(parse_hom(ctx, *opts)));
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>();
    auto* c = hom->add_subcommand("restrict", "restriction to a smaller domain");
    c->add_option("--hom", opts->first)->required();
    c->add_option("--to", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = hom_to_json(ctx, restrict_hom(parse_hom(ctx, opts->first),
                                              parse_subgroup(ctx, opts->second)));
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>("", "whole");
    auto* c = hom->add_subcommand("primitive", "basis-element test (exit 1 when not)");
    c->add_option("--word", opts->first)->required();
    c->add_option("--sub", opts->second, "ambient subgroup, default the whole group");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Subgroup s = parse_subgroup(ctx, opts->second);
      PrimitivityResult r = whitehead_is_primitive(s, parse_word(ctx, opts->first));
      ses.out = {{"primitive", r.primitive},
                 {"automorphisms", r.sequence.size()},
                 {"terminal", format_word(s.basis_context(), r.terminal)}};
      ses.rc = r.primitive ? 0 : 1;
    });
  }

  // ----- comm -----
  auto* comm = app.add_subcommand("comm", "commensurations (germs of virtual isomorphisms)");
  comm->require_subcommand(1);
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>();
    auto* c = comm->add_subcommand("eq", "same germ test (exit 1 when distinct)");
    c->add_option("--a", opts->first)->required();
    c->add_option("--b", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      bool e = equivalent(parse_comm(ctx, opts->first), parse_comm(ctx, opts->second));
      ses.out = {{"equivalent", e}};
      ses.rc = e ? 0 : 1;
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, std::string>>();
    auto* c = comm->add_subcommand("mul", "product, --first applied first");
    c->add_option("--first", opts->first)->required();
    c->add_option("--second", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = comm_to_json(ctx, multiply(parse_comm(ctx, opts->second),
                                           parse_comm(ctx, opts->first)));
    });
  }
  {
    auto opts = std::make_shared<std::string>();
    auto* c = comm->add_subcommand("inv", "inverse germ");
    c->add_option("--c", *opts)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = comm_to_json(ctx, invert_commensuration(parse_comm(ctx, *opts)));
    });
  }
  {
    struct InnerOpts {
      std::string word;
      std::string flavor = "profinite";
      long long p = 0;
    };
    auto opts = std::make_shared<InnerOpts>();
    auto* c = comm->add_subcommand("inner", "germ of a conjugation");
    c->add_option("--word", opts->word)->required();
    c->add_option("--flavor", opts->flavor, "profinite or pro_p")->capture_default_str();
    c->add_option("--p", opts->p, "prime, pro_p only");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = comm_to_json(ctx, inner_commensuration(ctx, parse_flavor(opts->flavor), opts->p,
                                                       parse_word(ctx, opts->word)));
    });
  }
  {
    auto opts = std::make_shared<std::pair<std::string, long long>>("", 2);
    auto* c = comm->add_subcommand("decompose", "index-p layer decomposition of an isomorphism");
    c->add_option("--input", opts->first, "isomorphism between p-open subgroups")->required();
    c->add_option("--p", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Commensuration c0 =
          make_commensuration(Flavor::pro_p, opts->second, parse_hom(ctx, opts->first));
      PDecomposition d = decompose_p(c0);
      json factors = json::array();
      for (const Commensuration& f : d.factors) factors.push_back(comm_to_json(ctx, f));
      ses.out = {{"ok", d.ok}, {"reason", d.reason}, {"factors", std::move(factors)}};
      ses.rc = d.ok ? 0 : 1;
    });
  }

  // ----- conj -----
  auto* conj = app.add_subcommand("conj", "conjugacy of germs and subgroups");
  conj->require_subcommand(1);
  {
    auto opts = std::make_shared<std::pair<std::string, long long>>("", 2);
    auto* c = conj->add_subcommand("dp", "prime-free part of the maximal-root exponent");
    c->add_option("--word", opts->first)->required();
    c->add_option("--p", opts->second)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ses.out = {{"dp", dp_invariant(parse_word(ctx, opts->first), opts->second)}};
    });
  }
  {
    struct WitnessOpts {
      std::string g, h;
      long long p = 0;
      long long max_index = 64;
    };
    auto opts = std::make_shared<WitnessOpts>();
    auto* c = conj->add_subcommand("witness", "germ conjugating one inner germ to another");
    c->add_option("--from", opts->g)->required();
    c->add_option("--to", opts->h)->required();
    c->add_option("--p", opts->p, "switch to the pro-p flavor");
    c->add_option("--max-index", opts->max_index)->envname("COMMFREE_MAX_INDEX");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      Word g = parse_word(ctx, opts->g), h = parse_word(ctx, opts->h);
      if (opts->p == 0) {
        ses.out = {{"witness", comm_to_json(ctx, comm_conjugator(ctx, g, h))}};
        return;
      }
      CommpConjugacy r = commp_conjugator(ctx, g, h, opts->p, opts->max_index);
      ses.out = {{"possible", r.possible},
                 {"refused", r.refused},
                 {"dp_g", r.dp_g},
                 {"dp_h", r.dp_h}};
      if (r.c) ses.out["witness"] = comm_to_json(ctx, *r.c);
      ses.rc = r.refused ? 2 : (r.possible ? 0 : 1);
    });
  }
  {
    struct BsOpts {
      std::string word;
      long long p = 2;
      long long max_index = 64;
    };
    auto opts = std::make_shared<BsOpts>();
    auto* c = conj->add_subcommand("bs", "germ carrying i(w) to i(w^p)");
    c->add_option("--word", opts->word)->required();
    c->add_option("--p", opts->p)->required();
    c->add_option("--max-index", opts->max_index)->envname("COMMFREE_MAX_INDEX");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      WitnessResult r = bs_witness(ctx, parse_word(ctx, opts->word), opts->p, opts->max_index);
      ses.out = {{"refused", r.refused}};
      if (r.c) ses.out["witness"] = comm_to_json(ctx, *r.c);
      ses.rc = r.refused ? 2 : 0;
    });
  }
  {
    struct SubConjOpts {
      std::string a, b;
      std::string flavor = "profinite";
      long long p = 0;
      long long max_index = 64;
    };
    auto opts = std::make_shared<SubConjOpts>();
    auto* c = conj->add_subcommand("subgroup", "germ carrying one subgroup onto another");
    c->add_option("--a", opts->a)->required();
    c->add_option("--b", opts->b)->required();
    c->add_option("--flavor", opts->flavor)->capture_default_str();
    c->add_option("--p", opts->p, "prime, pro_p only");
    c->add_option("--max-index", opts->max_index)->envname("COMMFREE_MAX_INDEX");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      SubgroupConjugacy r =
          subgroup_conjugator(parse_subgroup(ctx, opts->a), parse_subgroup(ctx, opts->b),
                              parse_flavor(opts->flavor), opts->p, opts->max_index);
      ses.out = {{"possible", r.possible}, {"refused", r.refused}, {"reason", r.reason}};
      if (r.c) ses.out["witness"] = comm_to_json(ctx, *r.c);
      ses.rc = r.refused ? 2 : (r.possible ? 0 : 1);
    });
  }

  // ----- family -----
  auto* family = app.add_subcommand("family", "generator families of commensurator subgroups");
  family->require_subcommand(1);
  {
    struct FamOpts {
      long long m = 2;
      bool full = false;
    };
    auto add_family = [&](const char* name, const char* desc, auto build) {
      auto opts = std::make_shared<FamOpts>();
      auto* c = family->add_subcommand(name, desc);
      c->add_option("--m", opts->m)->required();
      c->add_flag("--full", opts->full, "emit every germ");
      c->callback([&ses, opts, build] {
        RankContext ctx = ses.context();
        std::vector<Commensuration> germs = build(ctx, opts->m);
        ses.out = {{"count", germs.size()}};
        if (opts->full) {
          json arr = json::array();
          for (const Commensuration& g : germs) arr.push_back(comm_to_json(ctx, g));
          ses.out["germs"] = std::move(arr);
        }
      });
    };
    add_family("sm", "transvection germs over the order-m cyclic kernels",
               [](const RankContext& ctx, long long m) { return sm_generators(ctx, m); });
    add_family("am", "the same with inversions and transpositions",
               [](const RankContext& ctx, long long m) { return am_generators(ctx, m); });
  }
  {
    struct SpnOpts {
      long long p = 2;
      int n = 1;
      bool full = false;
    };
    auto opts = std::make_shared<SpnOpts>();
    auto* c = family->add_subcommand("spn", "transvection germs over p-open subgroups of index <= p^n");
    c->add_option("--p", opts->p)->required();
    c->add_option("--n", opts->n)->required();
    c->add_flag("--full", opts->full, "emit every germ");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      std::vector<Commensuration> germs = spn_generators(ctx, opts->p, opts->n);
      ses.out = {{"count", germs.size()}};
      if (opts->full) {
        json arr = json::array();
        for (const Commensuration& g : germs) arr.push_back(comm_to_json(ctx, g));
        ses.out["germs"] = std::move(arr);
      }
    });
  }

  // ----- verify -----
  auto* verify = app.add_subcommand("verify", "batch identity suites (exit 1 on any failure)");
  verify->require_subcommand(1);
  {
    struct DetOpts {
      long long m = 2;
      int d = 0;
    };
    auto opts = std::make_shared<DetOpts>();
    auto* c = verify->add_subcommand("det-lemma", "determinants of letter maps on the cyclic kernel");
    c->add_option("--m", opts->m)->required();
    c->add_option("--d", opts->d, "rank override");
    c->callback([&ses, opts] {
      RankContext ctx = opts->d > 0 ? RankContext::standard(opts->d) : ses.context();
      std::vector<DetLemmaEntry> entries = det_lemma_suite(ctx, opts->m);
      bool pass = true;
      json arr = json::array();
      for (const DetLemmaEntry& e : entries) {
        bool ok = e.computed == e.predicted;
        pass = pass && ok;
        arr.push_back({{"name", e.name},
                       {"computed", e.computed},
                       {"predicted", e.predicted},
                       {"ok", ok}});
      }
      ses.out = {{"rank", ctx.rank()}, {"m", opts->m}, {"entries", std::move(arr)}, {"pass", pass}};
      ses.rc = pass ? 0 : 1;
    });
  }
  {
    struct ResOpts {
      long long m = 2;
      int d = 0;
    };
    auto opts = std::make_shared<ResOpts>();
    auto* c = verify->add_subcommand("restriction", "first transvection restricted to the cyclic kernel");
    c->add_option("--m", opts->m)->required();
    c->add_option("--d", opts->d, "rank override");
    c->callback([&ses, opts] {
      RankContext ctx = opts->d > 0 ? RankContext::standard(opts->d) : ses.context();
      RestrictionReport r = r12_restriction_check(ctx, opts->m);
      bool pass = r.power_formula && r.abelian_fixed && r.unipotent;
      ses.out = {{"rank", ctx.rank()},
                 {"m", opts->m},
                 {"power_formula", r.power_formula},
                 {"abelian_fixed", r.abelian_fixed},
                 {"unipotent", r.unipotent},
                 {"matrix", r.matrix},
                 {"pass", pass}};
      ses.rc = pass ? 0 : 1;
    });
  }
  {
    struct ArithOpts {
      long long p = 2;
      int kmax = 4;
    };
    auto opts = std::make_shared<ArithOpts>();
    auto* c = verify->add_subcommand("arithmetic", "rational matrix identities behind power conjugators");
    c->add_option("--p", opts->p)->required();
    c->add_option("--kmax", opts->kmax)->capture_default_str();
    c->callback([&ses, opts] {
      ArithmeticReport r = arithmetic_identities(opts->p, opts->kmax);
      ses.out = {{"p", opts->p},
                 {"kmax", opts->kmax},
                 {"conj_shift", r.conj_shift},
                 {"diag_product", r.diag_product},
                 {"power_up", r.power_up},
                 {"power_down", r.power_down},
                 {"pass", r.ok}};
      ses.rc = r.ok ? 0 : 1;
    });
  }
  {
    struct PatOpts {
      long long m = 2, ell = 2;
      int trials = 20;
      uint64_t seed = 1;
    };
    auto opts = std::make_shared<PatOpts>();
    auto* c = verify->add_subcommand("pattern", "congruence pattern closure on random matrices");
    c->add_option("--m", opts->m)->required();
    c->add_option("--ell", opts->ell)->required();
    c->add_option("--trials", opts->trials)->capture_default_str();
    c->add_option("--seed", opts->seed)->capture_default_str();
    c->callback([&ses, opts] {
      bool pass = pattern_closure(opts->m, opts->ell, opts->trials, opts->seed);
      ses.out = {{"m", opts->m},
                 {"ell", opts->ell},
                 {"trials", opts->trials},
                 {"seed", opts->seed},
                 {"pass", pass}};
      ses.rc = pass ? 0 : 1;
    });
  }

  // ----- probe -----
  auto* probe = app.add_subcommand("probe", "finite mod-p layer probes");
  probe->require_subcommand(1);
  {
    struct K1Opts {
      std::string word;
      long long p = 2;
      int bound = 4;
    };
    auto opts = std::make_shared<K1Opts>();
    auto* c = probe->add_subcommand("k1", "first-layer exclusion certificate");
    c->add_option("--word", opts->word)->required();
    c->add_option("--p", opts->p)->required();
    c->add_option("--bound", opts->bound, "orbit search depth")->envname("COMMFREE_ORBIT_BOUND");
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      ExclusionOutcome out = k1_exclude(ctx, parse_word(ctx, opts->word), opts->p, opts->bound);
      if (out.refused) {
        ses.out = {{"refused", true}};
        ses.rc = 2;
        return;
      }
      const ExclusionCertificate& cert = *out.cert;
      ses.out = {{"refused", false},
                 {"kind", cert.kind == ExclusionCertificate::Kind::image_nonzero
                              ? "image_nonzero"
                              : "orbit_escape"},
                 {"word", format_word(ctx, cert.w)},
                 {"moves", cert.move_names},
                 {"move_indices", cert.moves},
                 {"transported", format_word(ctx, cert.transported)},
                 {"vector", cert.vec}};
    });
  }
  {
    struct PhiOpts {
      long long p = 2;
      int kmax = 5;
    };
    auto opts = std::make_shared<PhiOpts>();
    auto* c = probe->add_subcommand("phi", "tower collapse isomorphism certificate");
    c->add_option("--p", opts->p)->required();
    c->add_option("--kmax", opts->kmax)->capture_default_str();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      PhiCertificate cert = phi_iso_certificate(ctx, opts->p, opts->kmax);
      json tower = json::array();
      for (const Word& w : cert.tower) tower.push_back(format_word(ctx, w));
      ses.out = {{"ok", cert.ok},
                 {"phi", hom_to_json(ctx, cert.phi)},
                 {"tower", std::move(tower)},
                 {"step_ok", cert.step_ok},
                 {"collapse_ok", cert.collapse_ok}};
      ses.rc = cert.ok ? 0 : 1;
    });
  }
  {
    struct KnOpts {
      long long p = 2;
      int n = 1;
    };
    auto opts = std::make_shared<KnOpts>();
    auto* c = probe->add_subcommand("kn", "first-layer constraints per p-open subgroup");
    c->add_option("--p", opts->p)->required();
    c->add_option("--n", opts->n)->required();
    c->callback([&ses, opts] {
      RankContext ctx = ses.context();
      std::vector<LayerReport> reports = kn_layer_constraint(ctx, opts->p, opts->n);
      json arr = json::array();
      for (const LayerReport& r : reports)
        arr.push_back({{"index", r.index},
                       {"rank", r.rank},
                       {"containment_dim", r.containment_dim},
                       {"invariant_dim", r.invariant_dim},
                       {"graph", subgroup_to_json(r.u)}});
      ses.out = {{"reports", std::move(arr)}};
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  ses.emit();
  return ses.rc;
}
