#include <stdio.h>
#include <string.h>

#include "tgraph.h"

int main(void) {
    TgraphGraph *a = NULL;
    TgraphGraph *b = NULL;
    if (tgraph_graph_parse("4 3\n0 1\n1 2\n2 3\n", &a) != TGRAPH_STATUS_OK) return 1;
    if (tgraph_graph_parse("4 3\n1 3\n0 1\n0 2\n", &b) != TGRAPH_STATUS_OK) return 2;
    TgraphVerdict verdict;
    size_t witness[4];
    size_t d = 0;
    if (tgraph_is_isomorphic(a, b, 3, &verdict, witness, &d) != TGRAPH_STATUS_OK) return 3;
    if (verdict != TGRAPH_VERDICT_ISOMORPHIC) return 4;
    char *json = NULL;
    if (tgraph_decompose_json(a, 2, &json) != TGRAPH_STATUS_OK) return 5;
    if (strstr(json, "\"levels\"") == NULL) return 6;
    tgraph_string_free(json);
    if (tgraph_graph_add_edge(a, 0, 9) != TGRAPH_STATUS_INVALID_EDGE) return 7;
    if (strlen(tgraph_last_error_message()) == 0) return 8;
    tgraph_graph_free(a);
    tgraph_graph_free(b);
    printf("ok %zu\n", d);
    return 0;
}
