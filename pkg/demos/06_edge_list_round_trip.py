"""Write a graph to the edge-list format, read it back and estimate from a file sample."""
import io

from degest import generate_power_law, induced_subgraph_sample, load_edge_list, make_estimator
from degest.graph import write_edge_list
from degest.sampling import load_sample, write_sample

g = generate_power_law(800, 2.5, 0.01, seed=4)
buf = io.StringIO()
write_edge_list(g, buf)
text = buf.getvalue()
print(text.splitlines()[0], f"... {len(text.splitlines())} lines")
assert load_edge_list(text.encode()) == g

s = induced_subgraph_sample(g, 0.25, seed=9)
sample_file = io.StringIO()
write_sample(s, sample_file)
back = load_sample(io.StringIO(sample_file.getvalue()))
est = make_estimator("urm")(back)
print(f"sample of {back.n} nodes; first URM estimates: {est[:4].round(2)}")
