import pytest

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "the", "cat", "sat", "on", "a", "mat", "dog", "ran", "fast",
         "bird", "sang", "##s", "##ing", ".", ",", "big", "old", "red",
         "house", "tree", "sky", "blue", "run", "walk", "jump"]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized masked LM saved to disk, fully offline."""
    import torch
    from tokenizers import BertWordPieceTokenizer
    from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

    directory = tmp_path_factory.mktemp("tiny-mlm")
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(
        tokenizer_object=BertWordPieceTokenizer(str(vocab_file), lowercase=False),
        unk_token="[UNK]", sep_token="[SEP]", pad_token="[PAD]", cls_token="[CLS]",
        mask_token="[MASK]")
    tokenizer.save_pretrained(directory)
    config = BertConfig(vocab_size=len(VOCAB), hidden_size=32, num_hidden_layers=2,
                        num_attention_heads=2, intermediate_size=64,
                        max_position_embeddings=64)
    torch.manual_seed(20240611)
    BertForMaskedLM(config).save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_model(tiny_model_dir):
    from mlm_server.model import MaskedLmModel, ServerConfig

    return MaskedLmModel(ServerConfig(model_path=str(tiny_model_dir),
                                      backend_id="tiny-test-model",
                                      max_batch_size=4))


@pytest.fixture(scope="session")
def client(tiny_model):
    from fastapi.testclient import TestClient

    from mlm_server.app import create_app

    with TestClient(create_app(tiny_model)) as client:
        yield client


@pytest.fixture(scope="session")
def live_server(tiny_model):
    import socket
    import threading
    import time

    import uvicorn

    from mlm_server.app import create_app

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(create_app(tiny_model), host="127.0.0.1", port=port,
                            log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("sidecar did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
