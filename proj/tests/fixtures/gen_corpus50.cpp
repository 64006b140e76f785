// Writes the corpus50 fixture: a recorded archive of a small report site,
// the scripted model replies for every request the pipeline will make, the
// run config, and expected.json holding the ground truth the generator
// designed in. Output is deterministic; regenerating must not change a byte.
//
//   gen_corpus50 <out_dir> <frame.yaml>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "pdf_builder.hpp"
#include "pfd/code/frame.hpp"
#include "pfd/common/date.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using pfd::Date;

namespace {

const std::string kHost = "https://fixture.pfd.test";
const std::string kBase = kHost + "/prevention-of-future-death-reports/";

enum class Kind { text_pdf, scanned_pdf, html_only, corrupt_pdf };
enum class Story { child_suicide, child_suicide_cue, adult_suicide, child_accident, adult_other };

struct Report {
  int n = 0;  // 1..50 valid reports; 51+ are edge cases
  std::string token;
  std::string first, surname;
  Kind kind = Kind::text_pdf;
  bool html_table = false;
  Story story = Story::adult_other;
  int age = 0;
  Date date;
  std::optional<Date> ocr_date;  // set when the scan disagrees with the HTML
  std::string coroner, area;
  std::vector<std::string> addressees;
  std::vector<std::string> sub_themes;
  std::vector<std::string> recipients;
  std::string investigation, circumstances, concerns, action;
  std::vector<std::string> evidence;
  bool malformed_first = false;
  bool listed_dated = true;

  std::string slug() const { return pfd::to_lower(first + "-" + surname) + "-prevention-of-future-deaths-report"; }
  std::string page_url() const { return kBase + slug() + "/"; }
  std::string pdf_name() const { return surname + "-" + std::to_string(date.year()) + "-" + pad(n) + ".pdf"; }
  std::string pdf_url(const std::string& folder) const { return kHost + "/wp-content/uploads/" + folder + "/" + pdf_name(); }
  static std::string pad(int v) {
    char b[8];
    std::snprintf(b, sizeof b, "%04d", v);
    return b;
  }
};

const char* kFirst[] = {"Alex", "Sam", "Jordan", "Casey", "Robin", "Charlie", "Morgan", "Jamie", "Riley", "Taylor",
                        "Kit", "Ashley", "Drew", "Frankie", "Jo", "Lee", "Quinn", "Rowan", "Sasha", "Toni"};
const char* kSurname[] = {
    "Abbott",   "Barker",  "Carver",  "Dalton",  "Ellison", "Fenwick", "Garside", "Hollins", "Irving",  "Jarvis",
    "Kendall",  "Lowther", "Marsden", "Norcott", "Oakley",  "Pryce",   "Quarry",  "Rowntree", "Sefton", "Thorne",
    "Upton",    "Varley",  "Wadham",  "Yardley", "Ashcroft", "Bramley", "Coombes", "Dunmore", "Eastham", "Fairley",
    "Goodwin",  "Hartley", "Ingham",  "Jessop",  "Kirkby",  "Lambert", "Mottram", "Newbold", "Ormerod", "Pickles",
    "Ramsden",  "Stainer", "Tranter", "Underwood", "Vickers", "Whitley", "Yeadon", "Allsop", "Birtwell", "Cattermole",
    "Dewhurst", "Entwistle", "Foulds", "Gledhill", "Haworth"};

const std::pair<const char*, const char*> kCoroners[] = {
    {"Helen Ashworth", "Northshire"},         {"David Pennington", "Westmere"},
    {"Priya Raman", "Eastvale and Dunford"},  {"Martin Coles", "City of Harbridge"},
    {"Susan Okafor", "South Calder"},         {"Gareth Lewis", "Mid Fenland"}};

const std::map<std::string, std::vector<std::string>> kRecipients = {
    {"nhs_body", {"Chief Executive, Northshire NHS Foundation Trust", "Chief Executive, Westmere Integrated Care Board",
                  "Chief Executive, Calder Valley Mental Health NHS Trust"}},
    {"government", {"Secretary of State for Health and Social Care", "Secretary of State for Education"}},
    {"local_authority", {"Director of Children's Services, Westmere County Council",
                         "Chief Executive, Harbridge City Council"}},
    {"professional_body", {"President, Royal College of Psychiatrists", "Chief Executive, General Medical Council"}},
    {"other", {"Chief Executive, Network Rail", "Head Teacher, St Aidan's Academy", "Chief Constable, Eastvale Police"}},
};

const std::map<std::string, std::string> kConcern = {
    {"sop_not_followed", "The trust's own standard operating procedure for follow-up after self-harm was not followed."},
    {"risk_assessment", "No formal risk assessment was completed when the young person was first seen."},
    {"specialist_services", "There is no specialist eating disorder or crisis service for under-18s in the county."},
    {"discharge", "The young person was discharged from the ward without a written safety plan."},
    {"diagnostics", "A diagnosis of autism was suspected but no assessment had been arranged."},
    {"training", "Reception staff had received no training in recognising a mental health crisis."},
    {"inadequate_staffing", "The crisis team was staffed by a single practitioner overnight."},
    {"lack_of_funding", "Commissioners told the inquest that funding for the home treatment team had been withdrawn."},
    {"recruitment_retention", "Vacancies for consultant child psychiatrists have remained unfilled for two years."},
    {"between_services", "The school was not told by the hospital that the young person had attended after an overdose."},
    {"within_services", "Notes of the crisis call were not passed to the community team within the same trust."},
    {"with_patient_family", "The parents were not told about their child's disclosures of suicidal thoughts."},
    {"confidentiality_risk", "Clinicians said that confidentiality prevented them from sharing the risk with the family."},
    {"local_authority_issues", "Children's social care closed the referral without visiting the family."},
    {"disconnected_care", "No single professional held responsibility for coordinating the young person's care."},
    {"camhs_transition", "The transition from CAMHS to adult services began only two weeks before the eighteenth birthday."},
    {"referral_delays", "The referral to CAMHS waited eleven weeks before it was triaged."},
    {"engagement_lacking", "After two missed appointments the young person was discharged with no attempt at contact."},
    {"referrals_rejected", "Two referrals from the GP were rejected as not meeting the threshold for CAMHS."},
    {"harmful_items", "The ligature point in the bedroom had been identified months earlier and not removed."},
    {"internet_content", "The young person had viewed online content that described methods of suicide in detail."},
    {"trainlines", "Fencing at the level crossing was damaged and had not been repaired despite earlier reports."},
    {"sensitive_material", "The school's lessons on suicide used material that had not been reviewed for safe messaging."},
};

const char* kRiskRepeats[] = {
    "No formal risk assessment was completed when the young person was first seen.",
    "A second risk assessment after the overdose in March was not recorded.",
    "The risk assessment tool used by the ward was not validated for adolescents.",
    "Staff relied on a risk assessment completed by the school rather than their own.",
    "No risk assessment was repeated when the young person disclosed a plan to end their life."};

const char* kNeutralConcerns[] = {
    "There was no written protocol for escalating a fall to the on-call doctor.",
    "Observations were recorded late and the deterioration was not recognised.",
    "The ambulance response exceeded the national target by forty minutes.",
    "Discharge medication was not reconciled against the hospital record.",
    "The handover between day and night staff omitted the pressure ulcer.",
    "The road layout at the junction does not warn drivers of the bend.",
    "Sepsis screening was not started despite a raised early warning score."};

const char* kAdultStories[] = {
    "was an 82-year-old resident of a care home who fell in the night and sustained a fractured hip. They died in "
    "hospital from pneumonia complicating the fracture.",
    "was a 57-year-old lorry driver who collapsed at work. The medical cause of death was a ruptured abdominal aortic "
    "aneurysm that had been missed at an earlier scan.",
    "was a 46-year-old patient admitted with abdominal pain. Sepsis was not recognised for nine hours and they died "
    "the following day.",
    "was a 29-year-old cyclist struck by a van at a junction on the ring road. The conclusion was road traffic "
    "collision.",
    "was a 71-year-old patient discharged home without their anticoagulant. They died from a pulmonary embolism.",
    "was a 38-year-old man found dead at home. The cause of death was mixed drug toxicity and the conclusion was "
    "misadventure."};

Date month_date(int n) {
  int months = 1 + (n - 1) * 2;  // from August 2013
  int y = 2013 + (7 + months - 1) / 12;
  unsigned m = static_cast<unsigned>((7 + months - 1) % 12 + 1);
  unsigned d = static_cast<unsigned>(1 + (n * 7) % 27);
  return Date::from_ymd(y, m, d);
}

const char* kMonths[] = {"January", "February", "March", "April", "May", "June", "July",
                         "August", "September", "October", "November", "December"};

std::string long_date(const Date& d) {
  return std::to_string(d.day()) + " " + kMonths[d.month() - 1] + " " + std::to_string(d.year());
}
std::string slash_date(const Date& d) {
  char b[16];
  std::snprintf(b, sizeof b, "%02u/%02u/%04d", d.day(), d.month(), d.year());
  return b;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

// Ground truth for the screened positives: who the report goes to and what
// it raises. Report 1 of the positives repeats risk assessment five times.
struct Positive {
  int n;
  std::vector<std::string> addressees;
  std::vector<std::string> sub_themes;
};
const std::vector<Positive> kPositives = {
    {2, {"nhs_body"}, {"risk_assessment", "camhs_transition", "discharge"}},
    {7, {"nhs_body", "government"}, {"referral_delays", "inadequate_staffing"}},
    {11, {"local_authority", "nhs_body"}, {"between_services", "local_authority_issues"}},
    {14, {"government", "other"}, {"internet_content", "harmful_items"}},
    {19, {"other"}, {"trainlines"}},
    {22, {"nhs_body"}, {"referrals_rejected", "engagement_lacking"}},
    {27, {"nhs_body", "government"}, {"specialist_services", "lack_of_funding", "risk_assessment"}},
    {30, {"nhs_body", "professional_body"}, {"training", "sop_not_followed"}},
    {33, {"nhs_body", "professional_body"}, {"with_patient_family", "confidentiality_risk"}},
    {38, {"other", "local_authority"}, {"sensitive_material", "within_services"}},
    {43, {"nhs_body"}, {"disconnected_care", "recruitment_retention", "diagnostics"}},
    {48, {"nhs_body", "local_authority"}, {"referral_delays", "risk_assessment"}},
};
constexpr int kCueCase = 27;
constexpr int kMalformedCase = 14;
constexpr int kExtraSpanCase = 38;
constexpr int kRiskRepeatCase = 2;
constexpr int kAdultSuicide = 5;
constexpr int kChildAccident = 9;
constexpr int kDateConflict = 19;
const std::set<int> kScanned = {7, 19, 28, 36, 44};
const std::set<int> kHtmlOnly = {11, 23, 41};
constexpr int kCorrupt = 33;

Report make_report(int n) {
  Report r;
  r.n = n;
  char tok[16];
  std::snprintf(tok, sizeof tok, "[FX-%03d]", n);
  r.token = tok;
  r.first = kFirst[(n * 7) % 20];
  r.surname = kSurname[n - 1];
  r.date = month_date(n);
  const auto& [coroner, area] = kCoroners[n % 6];
  r.coroner = coroner;
  r.area = area;
  if (kScanned.count(n)) r.kind = Kind::scanned_pdf;
  else if (kHtmlOnly.count(n)) r.kind = Kind::html_only;
  else if (n == kCorrupt) r.kind = Kind::corrupt_pdf;
  r.html_table = r.kind != Kind::text_pdf && r.kind != Kind::scanned_pdf ? true : (n % 2 == 0 || n == 7 || n == kDateConflict);
  if (n == kDateConflict) r.ocr_date = Date::from_ymd(r.date.year(), r.date.month(), r.date.day() == 28 ? 1 : r.date.day() + 1);

  const std::string name = r.first + " " + r.surname;
  std::vector<std::string> concerns;
  for (const auto& p : kPositives) {
    if (p.n != n) continue;
    r.story = n == kCueCase ? Story::child_suicide_cue : Story::child_suicide;
    r.addressees = p.addressees;
    r.sub_themes = p.sub_themes;
  }
  if (n == kAdultSuicide) r.story = Story::adult_suicide;
  if (n == kChildAccident) r.story = Story::child_accident;

  const Date inquest = Date::from_ymd(r.date.year() - (r.date.month() <= 3 ? 1 : 0),
                                      r.date.month() <= 3 ? r.date.month() + 9 : r.date.month() - 3, 10);
  switch (r.story) {
    case Story::child_suicide:
      r.age = 12 + n % 6;
      r.circumstances = name + " was a " + std::to_string(r.age) +
                        "-year-old pupil who had been known to local mental health services. " + r.first +
                        " died at home after an act of self-harm and the medical cause of death was hanging. "
                        "The evidence showed that " + r.first + " intended to take their own life.";
      r.evidence = {name + " was a " + std::to_string(r.age) +
                        "-year-old pupil who had been known to local mental health services.",
                    "The evidence showed that " + r.first + " intended to take their own life."};
      break;
    case Story::child_suicide_cue:
      r.circumstances = name + " was a Year 10 pupil at a local secondary school and had been on the waiting list "
                        "for CAMHS for four months. " + r.first + " was found hanged in the family home and had left "
                        "a note explaining that they wished to end their life.";
      r.evidence = {name + " was a Year 10 pupil at a local secondary school",
                    "had left a note explaining that they wished to end their life"};
      break;
    case Story::adult_suicide:
      r.age = 34;
      r.circumstances = name + " was a 34-year-old warehouse manager with a long history of depression. " + r.first +
                        " took their own life at home two days after being assessed by the crisis team.";
      break;
    case Story::child_accident:
      r.age = 9;
      r.circumstances = name + ", aged 9, drowned after falling through ice on a reservoir near the family home. "
                        "The conclusion was accidental death.";
      break;
    case Story::adult_other:
      r.circumstances = name + " " + kAdultStories[n % 6];
      break;
  }
  r.investigation = "On " + long_date(inquest) + " I commenced an investigation into the death of " + name +
                    (r.age ? ", aged " + std::to_string(r.age) : std::string()) +
                    ". The investigation concluded at the end of the inquest. Inquest reference " + r.token + ".";

  if (!r.sub_themes.empty()) {
    for (const auto& s : r.sub_themes) {
      if (s == "risk_assessment" && n == kRiskRepeatCase) {
        for (const char* line : kRiskRepeats) concerns.push_back(line);
      } else {
        concerns.push_back(kConcern.at(s));
      }
    }
    for (std::size_t i = 0; i < r.addressees.size(); ++i) {
      const auto& bank = kRecipients.at(r.addressees[i]);
      r.recipients.push_back(bank[(static_cast<std::size_t>(n) + i) % bank.size()]);
    }
  } else {
    concerns.push_back(kNeutralConcerns[n % 7]);
    concerns.push_back(kNeutralConcerns[(n + 3) % 7]);
    r.recipients.push_back(kRecipients.at("nhs_body")[static_cast<std::size_t>(n) % 3]);
    if (n % 4 == 0) r.recipients.push_back(kRecipients.at("government")[0]);
  }
  r.concerns = "During the course of the inquest the evidence revealed matters giving rise to concern. In my opinion "
               "there is a risk that future deaths will occur unless action is taken.";
  for (std::size_t i = 0; i < concerns.size(); ++i) r.concerns += "\n(" + std::to_string(i + 1) + ") " + concerns[i];
  r.action = "In my opinion action should be taken to prevent future deaths and I believe you and your organisation "
             "have the power to take such action.";
  return r;
}

std::vector<std::string> report_lines(const Report& r, const Date& shown_date) {
  std::vector<std::string> paras = {"REGULATION 28: REPORT TO PREVENT FUTURE DEATHS", "THIS REPORT IS BEING SENT TO:"};
  for (const auto& x : r.recipients) paras.push_back(x);
  paras.push_back("1 CORONER");
  paras.push_back("I am " + r.coroner + ", assistant coroner for the coroner area of " + r.area + ".");
  paras.push_back("2 CORONER'S LEGAL POWERS");
  paras.push_back("I make this report under paragraph 7, Schedule 5, of the Coroners and Justice Act 2009.");
  paras.push_back("3 INVESTIGATION and INQUEST");
  paras.push_back(r.investigation);
  paras.push_back("4 CIRCUMSTANCES OF THE DEATH");
  paras.push_back(r.circumstances);
  paras.push_back("5 CORONER'S CONCERNS");
  for (const auto& line : pfd::split(r.concerns, '\n')) paras.push_back(line);
  paras.push_back("6 ACTION SHOULD BE TAKEN");
  paras.push_back(r.action);
  paras.push_back("Date: " + long_date(shown_date));
  return pfd::testing::wrap_lines(paras, 88);
}

std::string make_pdf(const Report& r) {
  pfd::testing::PdfBuilder b;
  if (r.kind == Kind::scanned_pdf) {
    for (std::uint32_t p = 0; p < 2; ++p) b.image_page(pfd::testing::scan_like_image(248, 351, static_cast<std::uint32_t>(r.n) * 10 + p));
    return b.build();
  }
  auto lines = report_lines(r, r.date);
  for (std::size_t i = 0; i < lines.size(); i += 40) {
    b.text_page(std::vector<std::string>(lines.begin() + static_cast<long>(i),
                                         lines.begin() + static_cast<long>(std::min(lines.size(), i + 40))));
  }
  return b.build();
}

std::string make_page_html(const Report& r, const std::string& pdf_url) {
  std::string h = "<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>" + r.first + " " +
                  r.surname + ": Prevention of future deaths report</title></head>\n<body>\n<article class=\"pfd\">\n"
                  "<h1>" + r.first + " " + r.surname + ": Prevention of future deaths report</h1>\n";
  if (r.html_table) {
    std::string sent;
    for (std::size_t i = 0; i < r.recipients.size(); ++i) sent += (i ? " | " : "") + html_escape(r.recipients[i]);
    h += "<table class=\"meta\">\n<tr><td>Date of report</td><td>" + slash_date(r.date) + "</td></tr>\n"
         "<tr><td>Coroner name</td><td>" + r.coroner + "</td></tr>\n"
         "<tr><td>Coroner area</td><td>" + r.area + "</td></tr>\n"
         "<tr><td>This report is being sent to</td><td>" + sent + "</td></tr>\n</table>\n";
  }
  if (!pdf_url.empty()) h += "<p><a href=\"" + pdf_url + "\">Download the report (PDF)</a></p>\n";
  if (r.kind == Kind::html_only || r.kind == Kind::corrupt_pdf) {
    auto section = [&](const std::string& heading, const std::string& body) {
      h += "<h2>" + heading + "</h2>\n";
      for (const auto& p : pfd::split(body, '\n')) h += "<p>" + html_escape(p) + "</p>\n";
    };
    section("Investigation and Inquest", r.investigation);
    section("Circumstances of the Death", r.circumstances);
    section("Coroner's Concerns", r.concerns);
    section("Action should be taken", r.action);
  }
  h += "</article>\n</body></html>\n";
  return h;
}

json extraction_reply(const Report& r) {
  const Date d = r.ocr_date.value_or(r.date);
  return json{{"published_date", long_date(d)},
              {"coroner_name", r.coroner},
              {"coroner_area", r.area},
              {"recipients", r.recipients},
              {"section_investigation", r.investigation},
              {"section_circumstances", r.circumstances},
              {"section_concerns", r.concerns},
              {"section_action", r.action}};
}

struct Listing {
  std::string url;
  std::string title;
  std::optional<Date> date;
};

std::string index_html(const std::vector<Listing>& items, int page, bool has_next) {
  std::string h = "<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>Prevention of future death "
                  "reports - page " + std::to_string(page) + "</title></head>\n<body>\n<main>\n";
  for (const auto& it : items) {
    h += "<article class=\"card\"><h3><a href=\"" + it.url + "\">" + it.title + "</a></h3>";
    if (it.date) h += "<time datetime=\"" + it.date->iso() + "\">" + long_date(*it.date) + "</time>";
    h += "</article>\n";
  }
  h += "<nav>";
  if (page > 1) h += "<a class=\"prev\" href=\"" + (page == 2 ? kBase : kBase + "page/" + std::to_string(page - 1) + "/") + "\">Previous</a> ";
  if (has_next) h += "<a class=\"next\" rel=\"next\" href=\"" + kBase + "page/" + std::to_string(page + 1) + "/\">Next</a>";
  h += "</nav>\n</main>\n</body></html>\n";
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: gen_corpus50 <out_dir> <frame.yaml>\n";
    return 2;
  }
  const fs::path out = argv[1];
  const auto frame = pfd::code::load_frame(argv[2]);
  fs::remove_all(out / "archive");
  fs::create_directories(out / "archive" / "pdf");

  std::vector<Report> reports;
  for (int n = 1; n <= 50; ++n) reports.push_back(make_report(n));

  // Edge cases: an out-of-window report listed without a date, and a page
  // that re-hosts report 12's PDF.
  Report old = make_report(51);
  old.date = Date::from_ymd(2012, 5, 14);
  old.listed_dated = false;
  old.html_table = false;

  json entries = json::array();
  json rules = json::array();
  std::vector<Listing> listings;

  auto add_file = [&](const std::string& url, const std::string& file, const std::string& body,
                      const std::string& type) {
    pfd::atomic_write(out / "archive" / file, body);
    entries.push_back({{"url", url}, {"file", file}, {"content_type", type}});
  };

  auto publish = [&](const Report& r) {
    const std::string folder = std::to_string(r.date.year()) + "/" + (r.date.month() < 10 ? "0" : "") +
                               std::to_string(r.date.month());
    std::string pdf_url;
    if (r.kind != Kind::html_only) {
      pdf_url = r.pdf_url(folder);
      const std::string bytes = r.kind == Kind::corrupt_pdf ? std::string("%PDF-1.4\n1 0 obj\n<< /Type /Catal")
                                                            : make_pdf(r);
      add_file(pdf_url, "pdf/" + r.pdf_name(), bytes, "application/pdf");
      if (r.kind != Kind::corrupt_pdf) {
        rules.push_back({{"schema", "report_extraction"},
                         {"contains", {"Document: " + r.pdf_name()}},
                         {"responses", {extraction_reply(r)}}});
      }
    }
    add_file(r.page_url(), "page-" + Report::pad(r.n) + ".html", make_page_html(r, pdf_url), "text/html; charset=utf-8");
    listings.push_back({r.page_url(), r.first + " " + r.surname + ": Prevention of future deaths report",
                        r.listed_dated ? std::optional<Date>(r.date) : std::nullopt});
  };
  for (const auto& r : reports) publish(r);
  publish(old);

  // Same PDF bytes and file name under another page and upload folder.
  {
    const Report& src = reports[11];
    const std::string url = kBase + pfd::to_lower(src.first + "-" + src.surname) + "-2/";
    const std::string pdf_url = kHost + "/wp-content/uploads/archive/" + src.pdf_name();
    add_file(pdf_url, "pdf/rehost-" + src.pdf_name(), make_pdf(src), "application/pdf");
    add_file(url, "page-rehost.html", make_page_html(src, pdf_url), "text/html; charset=utf-8");
    listings.push_back({url, src.first + " " + src.surname + " (republished)", src.date});
  }
  // Listed but gone.
  listings.push_back({kBase + "withdrawn-report/", "Withdrawn report", Date::from_ymd(2016, 2, 2)});
  entries.push_back({{"url", kBase + "withdrawn-report/"}, {"status", 404}, {"content_type", "text/html"}});

  // Newest first, ten to a page; report 3 is listed a second time on the last page.
  std::stable_sort(listings.begin(), listings.end(), [](const Listing& a, const Listing& b) {
    const Date da = a.date.value_or(Date::from_ymd(1900, 1, 1));
    const Date db = b.date.value_or(Date::from_ymd(1900, 1, 1));
    return db < da;
  });
  listings.push_back(listings[static_cast<std::size_t>(std::find_if(listings.begin(), listings.end(),
                                                                     [&](const Listing& l) {
                                                                       return l.url == reports[2].page_url();
                                                                     }) -
                                                        listings.begin())]);
  const std::size_t per_page = 10;
  const int pages = static_cast<int>((listings.size() + per_page - 1) / per_page);
  for (int p = 1; p <= pages; ++p) {
    const std::size_t lo = static_cast<std::size_t>(p - 1) * per_page;
    std::vector<Listing> items(listings.begin() + static_cast<long>(lo),
                               listings.begin() + static_cast<long>(std::min(listings.size(), lo + per_page)));
    const std::string url = p == 1 ? kBase : kBase + "page/" + std::to_string(p) + "/";
    add_file(url, "index-" + std::to_string(p) + ".html", index_html(items, p, p < pages), "text/html; charset=utf-8");
  }

  // Screening and coding replies, keyed on each report's reference token.
  json expected_positive = json::array();
  json expected_methods = json::object();
  std::map<std::string, int> addressee_counts, sub_theme_counts;
  for (const auto& a : frame.addressees) addressee_counts[a.id] = 0;
  for (const auto* s : frame.sub_themes()) sub_theme_counts[s->id] = 0;
  for (const auto& r : reports) {
    const bool positive = !r.sub_themes.empty();
    json reply = {{"match", positive}, {"evidence", positive ? json(r.evidence) : json::array()}};
    if (r.n == kExtraSpanCase) reply["evidence"].push_back("The child had expressed suicidal thoughts to a teacher.");
    json responses = json::array();
    if (r.n == kMalformedCase) responses.push_back("{\"match\": tru");
    responses.push_back(reply);
    rules.push_back({{"schema", "screen_verdict"}, {"contains", {r.token}}, {"responses", responses}});
    if (positive) {
      json codes = json::object();
      for (const auto& a : frame.addressees) {
        const bool on = std::find(r.addressees.begin(), r.addressees.end(), a.id) != r.addressees.end();
        codes[a.id] = on;
        addressee_counts[a.id] += on;
      }
      for (const auto* s : frame.sub_themes()) {
        const bool on = std::find(r.sub_themes.begin(), r.sub_themes.end(), s->id) != r.sub_themes.end();
        codes[s->id] = on;
        sub_theme_counts[s->id] += on;
      }
      rules.push_back({{"schema", "coding_"}, {"contains", {r.token}}, {"responses", {codes}}});
      expected_positive.push_back(r.token);
    }
    std::string method = "ocr_only";
    if (r.kind == Kind::html_only || r.kind == Kind::corrupt_pdf) method = "html_only";
    else if (r.html_table) method = "merged";
    expected_methods[r.token] = method;
  }
  // The old report also needs its extraction reply (added by publish); the
  // re-hosted copy reuses report 12's.

  pfd::atomic_write(out / "archive" / "manifest.json", json{{"entries", entries}}.dump(1) + "\n");
  pfd::atomic_write(out / "gateway.json", json{{"rules", rules}}.dump(1) + "\n");

  json expected = {
      {"scrape", {{"refs_found", reports.size() + 3}, {"fetch_failures", 1}, {"duplicates", 1},
                  {"out_of_window", 1}, {"records", reports.size()}}},
      {"screen", {{"positives", expected_positive.size()}, {"negatives", reports.size() - expected_positive.size()},
                  {"unscreenable", 0}}},
      {"positive_tokens", expected_positive},
      {"methods", expected_methods},
      {"malformed_then_valid", reports[kMalformedCase - 1].token},
      {"extra_span", reports[kExtraSpanCase - 1].token},
      {"risk_repeat", reports[kRiskRepeatCase - 1].token},
      {"cue_case", reports[kCueCase - 1].token},
      {"hard_negatives", {reports[kAdultSuicide - 1].token, reports[kChildAccident - 1].token}},
      {"date_conflict", {{"token", reports[kDateConflict - 1].token},
                         {"html", reports[kDateConflict - 1].date.iso()},
                         {"ocr", reports[kDateConflict - 1].ocr_date->iso()}}},
      {"addressee_counts", addressee_counts},
      {"sub_theme_counts", sub_theme_counts},
      {"coded_reports", expected_positive.size()}};
  pfd::atomic_write(out / "expected.json", expected.dump(1) + "\n");

  pfd::atomic_write(out / "config.yaml",
                       "# Pipeline config for fixture runs (pfd --fixture <this dir> run-all).\n"
                       "run:\n  out_dir: run\n  workers: 4\n"
                       "scrape:\n  base_url: " + kBase + "\n  from: 2013-07-01\n  to: 2023-11-30\n  dpi: 200\n"
                       "  scanned_chars_per_page: 200\n  requests_per_second: 1\n  checkpoint_every: 2\n"
                       "  max_retries: 1\n"
                       "model:\n  endpoint_url: https://model.fixture.test/v1/chat/completions\n"
                       "  model_name: fixture-model\n  temperature: 0\n  max_retries: 2\n  timeout_s: 30\n"
                       "  rate_limit_rpm: 0\n  api_key_env: PFD_FIXTURE_API_KEY\n  backoff_ms: 0\n"
                       "screen:\n  question: ../../../data/questions/child_suicide.yaml\n  evidence: true\n"
                       "  unscreenable_ceiling: 0.05\n"
                       "code:\n  frame: ../../../data/frames/ons_child_suicide.yaml\n  evidence: false\n"
                       "  uncoded_ceiling: 0.05\n"
                       "sample:\n  n_pos: 6\n  n_neg: 6\n  seed: 7\n");
  return 0;
}
