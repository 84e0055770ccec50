import os
from setuptools import setup, find_packages
from codecs import open

__version__ = '0.1.0'

here = os.path.abspath(os.path.dirname(__file__))

# Get the long description from README.md
with open(os.path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

# get the dependencies and installs
with open(os.path.join(here, 'requirements.txt'), encoding='utf-8') as f:
    all_reqs = f.read().split('\n')

install_requires = [x.strip() for x in all_reqs if x.strip()]

setup(
    name='LibInquire',
    author='massquantity',
    author_email='wdmjjxg@163.com',
    description=('Offline reinforcement learning of a dual-agent inquisitive dialogue policy '
                 'with hierarchical dialogue acts.'),
    long_description=long_description,
    long_description_content_type='text/markdown',
    version=__version__,
    license='MIT',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Developers',
        'Intended Audience :: Education',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    keywords=['Reinforcement Learning', 'Offline RL', 'Double DQN',
              'Hierarchical Policy', 'Dialogue Systems', 'Poincare Embeddings'],

    packages=find_packages(exclude=['test*', 'examples*']),
    include_package_data=True,
    python_requires='>=3.9',
    install_requires=install_requires,
    extras_require={'test': ['pytest>=6.0', 'hypothesis>=6.0']},
    entry_points={'console_scripts': ['libinquire=libinquire.cli:main']},
)
