#include <stdio.h>
#include "toeplitz_lab.h"
int main(void) {
    TlDeck *d = NULL;
    if (tl_deck_load_bundled("dihedral-m2", &d) != TL_STATUS_OK) return 1;
    int64_t v[1] = {3}; uint8_t s; uint32_t l;
    TlStatus st = tl_eta_value(d, v, 1, 0, &s, &l);
    printf("status %d symbol %u level %u\n", st, s, l);
    uint8_t sy[4]; int64_t nu[4], de[4]; size_t n;
    tl_mu_n_freq(d, 2, sy, nu, de, 4, &n);
    for (size_t i = 0; i < n; i++) printf("%u: %lld/%lld\n", sy[i], (long long)nu[i], (long long)de[i]);
    if (tl_deck_load_bundled("nope", &d) != TL_STATUS_OK) printf("err: %s\n", tl_last_error_message());
    tl_deck_free(d);
    return 0;
}
