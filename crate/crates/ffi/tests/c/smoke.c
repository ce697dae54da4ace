#include <math.h>
#include <stdio.h>
#include "ambiguity_auction.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "failed: %s (%s)\n", #cond, aa_last_error()); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  AaStructure *s = NULL;
  CHECK(aa_structure_from_json(
            "{\"valuation\":{\"kind\":\"uniform\"},\"distortion\":{\"kind\":\"identity\"},\"crra\":0.0}",
            &s) == AA_STATUS_OK);
  AaBidCurve *c = NULL;
  CHECK(aa_bid_curve_new(s, 2, 0.0, &c) == AA_STATUS_OK);
  double b = 0.0;
  CHECK(aa_bid_curve_bid(c, 0.8, &b) == AA_STATUS_OK);
  CHECK(fabs(b - 0.4) < 1e-8);
  double v = 0.0;
  CHECK(aa_bid_curve_inverse(c, 0.9, &v) == AA_STATUS_OUT_OF_SUPPORT);

  double rev[100];
  size_t len = 0;
  CHECK(aa_revenue_curve(s, 2, 0.01, rev, 100, &len) == AA_STATUS_OK);
  CHECK(len == 100 && fabs(rev[50] - 5.0 / 12.0) < 1e-6);
  CHECK(aa_revenue_curve(s, 2, 0.01, rev, 10, &len) == AA_STATUS_BUFFER_TOO_SMALL && len == 100);

  AaStructure *bad = NULL;
  CHECK(aa_structure_from_json("{", &bad) == AA_STATUS_PARSE && bad == NULL);
  CHECK(aa_structure_fstar(NULL, 0.5, &v) == AA_STATUS_NULL_POINTER);

  aa_bid_curve_free(c);
  aa_structure_free(s);
  printf("ok %s\n", aa_version());
  return 0;
}
