from .sampling import NegativeSampling, minibatches
from .similarities import tf_cosine, similarity_matrix, LexicalOracle, RemoteOracle, \
    build_oracle
from .serialization import save_checkpoint, load_checkpoint, check_manifest, \
    make_manifest, export_json, run_lock
