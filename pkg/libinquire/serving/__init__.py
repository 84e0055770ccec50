from .flask_app import create_app, load_policy, ServingPolicy
